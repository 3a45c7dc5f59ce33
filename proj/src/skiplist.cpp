#include "kotrie/skiplist.hpp"

#include <stdexcept>
#include <unordered_set>

#include "kotrie/debug.hpp"

namespace kotrie {

namespace {

constexpr std::uint64_t kMark = 1;
constexpr std::uint64_t kFlag = 2;
constexpr std::uint64_t kBits = 3;

SkipNode *right(std::uint64_t w) { return reinterpret_cast<SkipNode *>(w & ~kBits); }
bool marked(std::uint64_t w) { return (w & kMark) != 0; }
bool flagged(std::uint64_t w) { return (w & kFlag) != 0; }
std::uint64_t word(SkipNode *n, std::uint64_t bits = 0) {
  return reinterpret_cast<std::uint64_t>(n) | bits;
}

SkipNode *load_right(SkipNode *n) {
  check_live(n);
  return right(n->succ.load());
}

bool is_marked(SkipNode *n) {
  check_live(n);
  return marked(n->succ.load());
}

const RecordKind &node_kind() { return plain_kind<SkipNode>("SkipNode"); }

}  // namespace

SkipList::SkipList(std::size_t processes, std::uint64_t seed, unsigned height)
    : height_{height},
      n_{processes},
      reclaimer_{processes},
      heads_{std::make_unique<SkipNode[]>(height)},
      local_{std::make_unique<Local[]>(processes)} {
  if (height < 2) throw std::invalid_argument("skip list height must be >= 2");
  tail_.key = kPlusInfinity;
  tail_.tower_root = &tail_;
  for (unsigned v = 0; v < height; ++v) {
    heads_[v].key = kMinusInfinity;
    heads_[v].succ.store(word(&tail_));
    heads_[v].down = v == 0 ? nullptr : &heads_[v - 1];
    heads_[v].tower_root = &heads_[0];
  }
  for (std::size_t p = 0; p < processes; ++p) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(p)};
    local_[p].rng.seed(seq);
  }
}

SkipList::~SkipList() {
  reclaimer_.drain_all();
  std::unordered_set<SkipNode *> roots;
  for (unsigned v = 0; v < height_; ++v)
    for (SkipNode *n = right(heads_[v].succ.load()); n != &tail_; n = right(n->succ.load()))
      roots.insert(n->tower_root);
  for (SkipNode *root : roots) {
    for (SkipNode *n = root->tower_top.load(); n != nullptr;) {
      SkipNode *down = n->down;
      delete n;
      n = down;
    }
  }
}

ProcessId SkipList::register_thread() {
  const std::size_t id = registered_.fetch_add(1);
  if (id >= n_) throw std::length_error("more threads registered than configured");
  return static_cast<ProcessId>(id);
}

unsigned SkipList::draw_height(ProcessId pid) {
  unsigned h = 1;
  std::uint64_t bits = local_[pid].rng();
  while (h < height_ - 1 && (bits & 1) != 0) {
    ++h;
    bits >>= 1;
  }
  return h;
}

SkipList::Pair SkipList::search_right(ProcessId pid, Key k, SkipNode *curr) {
  SkipNode *next = load_right(curr);
  while (next->key <= k) {
    while (next->key <= k && is_marked(next->tower_root)) {
      bool won = false;
      if (try_flag(pid, curr, next, won) == FlagStatus::kIn) help_flagged(pid, curr, next);
      next = load_right(curr);
    }
    if (next->key <= k) {
      curr = next;
      next = load_right(curr);
    }
  }
  return {curr, next};
}

SkipList::Pair SkipList::search_to_level(ProcessId pid, Key k, unsigned level) {
  SkipNode *curr = &heads_[height_ - 1];
  for (unsigned v = height_ - 1; v > level; --v) curr = search_right(pid, k, curr).first->down;
  return search_right(pid, k, curr);
}

SkipList::FlagStatus SkipList::try_flag(ProcessId pid, SkipNode *&prev, SkipNode *target,
                                        bool &won) {
  won = false;
  for (;;) {
    check_live(prev);
    if (prev->succ.load() == word(target, kFlag)) return FlagStatus::kIn;
    std::uint64_t expected = word(target);
    debug::sched_point(debug::Site::kSkipCas);
    if (prev->succ.compare_exchange_strong(expected, word(target, kFlag))) {
      won = true;
      return FlagStatus::kIn;
    }
    if (expected == word(target, kFlag)) return FlagStatus::kIn;
    while (is_marked(prev)) prev = prev->backlink.load();
    Pair p = search_right(pid, target->key - 1, prev);
    prev = p.first;
    if (p.second != target) return FlagStatus::kDeleted;
  }
}

void SkipList::help_flagged(ProcessId pid, SkipNode *prev, SkipNode *del) {
  del->backlink.store(prev);
  if (!is_marked(del)) try_mark(pid, del);
  help_marked(pid, prev, del);
}

void SkipList::try_mark(ProcessId pid, SkipNode *del) {
  do {
    SkipNode *next = load_right(del);
    std::uint64_t expected = word(next);
    debug::sched_point(debug::Site::kSkipCas);
    if (!del->succ.compare_exchange_strong(expected, word(next, kMark)) &&
        flagged(expected) && !marked(expected))
      help_flagged(pid, del, right(expected));
  } while (!is_marked(del));
}

void SkipList::help_marked(ProcessId pid, SkipNode *prev, SkipNode *del) {
  SkipNode *next = load_right(del);
  std::uint64_t expected = word(del, kFlag);
  debug::sched_point(debug::Site::kSkipCas);
  if (prev->succ.compare_exchange_strong(expected, word(next))) release_tower(pid, del->tower_root);
}

void SkipList::release_tower(ProcessId pid, SkipNode *root) {
  if (root->tower_refs.fetch_sub(1) != 1) return;
  for (SkipNode *n = root->tower_top.load(); n != nullptr; n = n->down)
    reclaimer_.reclaim_later(pid, n, node_kind());
}

bool SkipList::delete_node(ProcessId pid, SkipNode *prev, SkipNode *del) {
  bool won = false;
  if (try_flag(pid, prev, del, won) == FlagStatus::kIn) help_flagged(pid, prev, del);
  return won;
}

SkipNode *SkipList::insert_node(ProcessId pid, SkipNode *new_node, SkipNode *&prev,
                                SkipNode *next) {
  if (prev->key == new_node->key) return prev;
  for (;;) {
    const std::uint64_t prev_succ = prev->succ.load();
    if (flagged(prev_succ)) {
      help_flagged(pid, prev, right(prev_succ));
    } else {
      new_node->succ.store(word(next));
      std::uint64_t expected = word(next);
      debug::sched_point(debug::Site::kSkipCas);
      if (prev->succ.compare_exchange_strong(expected, word(new_node))) return new_node;
      if (flagged(expected) && !marked(expected)) help_flagged(pid, prev, right(expected));
      while (is_marked(prev)) prev = prev->backlink.load();
    }
    Pair p = search_right(pid, new_node->key, prev);
    prev = p.first;
    next = p.second;
    if (prev->key == new_node->key) return prev;
  }
}

bool SkipList::insert(ProcessId pid, Key x) {
  OpScope scope{reclaimer_, pid};
  Pair p = search_to_level(pid, x, 0);
  if (p.first->key == x) return false;
  auto *root = new SkipNode;
  root->key = x;
  root->tower_root = root;
  root->tower_refs.store(2);
  const unsigned tower = draw_height(pid);
  SkipNode *node = root;
  SkipNode *prev = p.first;
  SkipNode *next = p.second;
  for (unsigned v = 0;;) {
    SkipNode *placed = insert_node(pid, node, prev, next);
    if (placed != node) {
      delete node;
      if (v == 0) return false;
      release_tower(pid, root);
      release_tower(pid, root);
      return true;
    }
    root->tower_top.store(node);
    if (is_marked(root)) {
      if (node != root) delete_node(pid, prev, node);
      release_tower(pid, root);
      return true;
    }
    if (++v == tower) {
      release_tower(pid, root);
      return true;
    }
    root->tower_refs.fetch_add(1);
    auto *up = new SkipNode;
    up->key = x;
    up->down = node;
    up->tower_root = root;
    node = up;
    Pair q = search_to_level(pid, x, v);
    prev = q.first;
    next = q.second;
  }
}

bool SkipList::remove(ProcessId pid, Key x) {
  OpScope scope{reclaimer_, pid};
  for (;;) {
    Pair p = search_to_level(pid, x - 1, 0);
    const std::uint64_t w = p.first->succ.load();
    if (marked(w)) continue;
    SkipNode *del = right(w);
    if (del->key > x) return false;
    if (del->key < x) continue;
    if (!delete_node(pid, p.first, del)) return false;
    search_to_level(pid, x, 1);
    return true;
  }
}

bool SkipList::search(ProcessId pid, Key x) {
  OpScope scope{reclaimer_, pid};
  for (;;) {
    Pair p = search_to_level(pid, x, 0);
    const std::uint64_t w = p.first->succ.load();
    if (marked(w)) continue;
    if (p.first->key == x) return true;
    if (right(w)->key > x) return false;
  }
}

Key SkipList::predecessor(ProcessId pid, Key x) {
  OpScope scope{reclaimer_, pid};
  for (;;) {
    Pair p = search_to_level(pid, x - 1, 0);
    const std::uint64_t w = p.first->succ.load();
    if (marked(w) || right(w)->key < x) continue;
    return p.first == &heads_[0] ? kNoKey : p.first->key;
  }
}

std::size_t SkipList::size_slow() const { return level_counts()[0]; }

std::vector<std::size_t> SkipList::level_counts() const {
  std::vector<std::size_t> counts(height_, 0);
  for (unsigned v = 0; v < height_; ++v) {
    for (SkipNode *n = right(heads_[v].succ.load()); n != &tail_; n = right(n->succ.load()))
      if (!marked(n->succ.load())) ++counts[v];
  }
  return counts;
}

bool SkipList::towers_clean() const {
  for (unsigned v = 1; v < height_; ++v) {
    for (SkipNode *n = right(heads_[v].succ.load()); n != &tail_; n = right(n->succ.load()))
      if (marked(n->tower_root->succ.load())) return false;
  }
  return true;
}

}  // namespace kotrie
