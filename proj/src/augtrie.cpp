#include "kotrie/augtrie.hpp"

#include <stdexcept>

#include "kotrie/debug.hpp"

namespace kotrie {

namespace {

const RecordKind &version_kind() { return plain_kind<VersionNode>("VersionNode"); }

VersionNode *make_leaf(bool bit, bool completed) {
  auto *v = new VersionNode;
  v->leaf = true;
  v->sum = bit ? 1 : 0;
  v->completed.store(completed, std::memory_order_relaxed);
  return v;
}

VersionNode *load(const std::atomic<VersionNode *> &a) {
  VersionNode *v = a.load();
  check_live(v);
  return v;
}

}  // namespace

AugmentedTrie::AugmentedTrie(unsigned k, std::size_t processes)
    : k_{k}, n_{processes}, reclaimer_{processes} {
  if (k < 1 || k > kMaxK) throw std::invalid_argument("trie height must be in 1..24");
  const std::size_t leaves = std::size_t{1} << k;
  main_ = std::make_unique<std::atomic<VersionNode *>[]>(2 * leaves);
  for (std::size_t i = leaves; i < 2 * leaves; ++i) main_[i].store(make_leaf(false, true));
  for (std::size_t i = leaves - 1; i >= 1; --i) {
    auto *v = new VersionNode;
    v->left = main_[2 * i].load();
    v->right = main_[2 * i + 1].load();
    main_[i].store(v);
  }
}

AugmentedTrie::~AugmentedTrie() {
  reclaimer_.drain_all();
  const std::size_t leaves = std::size_t{1} << k_;
  for (std::size_t i = 1; i < 2 * leaves; ++i) delete main_[i].load();
}

ProcessId AugmentedTrie::register_thread() {
  const std::size_t id = registered_.fetch_add(1);
  if (id >= n_) throw std::length_error("more threads registered than configured");
  return static_cast<ProcessId>(id);
}

bool AugmentedTrie::refresh(ProcessId pid, std::size_t index) {
  VersionNode *old = load(main_[index]);
  VersionNode *l = load(main_[2 * index]);
  VersionNode *r = load(main_[2 * index + 1]);
  if (old->left == l && old->right == r) return true;
  auto *v = new VersionNode;
  v->left = l;
  v->right = r;
  v->sum = l->sum + r->sum;
  debug::sched_point(debug::Site::kAugCas);
  if (main_[index].compare_exchange_strong(old, v)) {
    reclaimer_.reclaim_later(pid, old, version_kind());
    return true;
  }
  delete v;
  return false;
}

void AugmentedTrie::propagate(ProcessId pid, Key x) {
  std::size_t index = ((std::size_t{1} << k_) + static_cast<std::size_t>(x)) >> 1;
  for (; index >= 1; index >>= 1)
    if (!refresh(pid, index)) refresh(pid, index);
}

bool AugmentedTrie::update(ProcessId pid, Key x, bool bit) {
  if (x < 0 || x >= universe()) throw std::out_of_range("key outside universe");
  OpScope scope{reclaimer_, pid};
  auto &slot = main_[(std::size_t{1} << k_) + static_cast<std::size_t>(x)];
  VersionNode *cur = load(slot);
  if ((cur->sum != 0) == bit) {
    if (!cur->completed.load()) propagate(pid, x);
    return false;
  }
  VersionNode *fresh = make_leaf(bit, false);
  debug::sched_point(debug::Site::kAugCas);
  if (!slot.compare_exchange_strong(cur, fresh)) {
    delete fresh;
    propagate(pid, x);
    return false;
  }
  reclaimer_.reclaim_later(pid, cur, version_kind());
  propagate(pid, x);
  fresh->completed.store(true);
  return true;
}

bool AugmentedTrie::insert(ProcessId pid, Key x) { return update(pid, x, true); }
bool AugmentedTrie::remove(ProcessId pid, Key x) { return update(pid, x, false); }

bool AugmentedTrie::search(ProcessId pid, Key x) {
  if (x < 0 || x >= universe()) throw std::out_of_range("key outside universe");
  OpScope scope{reclaimer_, pid};
  VersionNode *leaf = load(main_[(std::size_t{1} << k_) + static_cast<std::size_t>(x)]);
  if (leaf->completed.load()) return leaf->sum != 0;
  VersionNode *v = load(main_[1]);
  for (int h = static_cast<int>(k_) - 1; h >= 0; --h) {
    if (v->sum == 0) return false;
    v = ((x >> h) & 1) != 0 ? v->right : v->left;
    check_live(v);
  }
  return v->sum != 0;
}

Key AugmentedTrie::predecessor(ProcessId pid, Key x) {
  if (x < 0 || x >= universe()) throw std::out_of_range("key outside universe");
  OpScope scope{reclaimer_, pid};
  VersionNode *v = load(main_[1]);
  VersionNode *candidate = nullptr;
  Key candidate_prefix = 0;
  int candidate_height = 0;
  Key prefix = 0;
  for (int h = static_cast<int>(k_) - 1; h >= 0 && v->sum != 0; --h) {
    if (((x >> h) & 1) != 0) {
      if (v->left->sum != 0) {
        candidate = v->left;
        candidate_prefix = prefix << 1;
        candidate_height = h;
      }
      v = v->right;
      prefix = (prefix << 1) | 1;
    } else {
      v = v->left;
      prefix <<= 1;
    }
    check_live(v);
  }
  if (candidate == nullptr) return kNoKey;
  v = candidate;
  prefix = candidate_prefix;
  for (int h = candidate_height - 1; h >= 0; --h) {
    if (v->right->sum != 0) {
      v = v->right;
      prefix = (prefix << 1) | 1;
    } else {
      v = v->left;
      prefix <<= 1;
    }
    check_live(v);
  }
  return prefix;
}

std::int64_t AugmentedTrie::size(ProcessId pid) {
  OpScope scope{reclaimer_, pid};
  return load(main_[1])->sum;
}

std::size_t AugmentedTrie::size_slow() const {
  const std::size_t leaves = std::size_t{1} << k_;
  std::size_t n = 0;
  for (std::size_t i = leaves; i < 2 * leaves; ++i) n += main_[i].load()->sum != 0;
  return n;
}

bool AugmentedTrie::check_sums(std::string *why) const {
  auto fail = [&](std::string msg) {
    if (why != nullptr) *why = std::move(msg);
    return false;
  };
  const std::size_t leaves = std::size_t{1} << k_;
  for (std::size_t i = 1; i < leaves; ++i) {
    const VersionNode *v = main_[i].load();
    if (v->left != main_[2 * i].load() || v->right != main_[2 * i + 1].load())
      return fail("stale child version under node " + std::to_string(i));
    if (v->sum != v->left->sum + v->right->sum)
      return fail("sum mismatch at node " + std::to_string(i));
  }
  if (static_cast<std::size_t>(main_[1].load()->sum) != size_slow())
    return fail("root sum differs from number of present keys");
  return true;
}

}  // namespace kotrie
