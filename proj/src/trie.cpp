#include "kotrie/trie.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace kotrie {

namespace {

const RecordKind kUpdateKind{
    "UpdateNode",
    [](Retirable *r) {
      auto *u = static_cast<UpdateNode *>(r);
      u->canary.store(kPoisonCanary, std::memory_order_relaxed);
      u->key.store(kPoisonKey, std::memory_order_relaxed);
    },
    [](Retirable *r) { delete static_cast<UpdateNode *>(r); }};

const RecordKind kPredecessorKind{
    "PredecessorNode",
    [](Retirable *r) {
      auto *p = static_cast<PredecessorNode *>(r);
      for (NotifyNode *n = p->notify_head.load(); n != nullptr; n = n->next) {
        n->canary.store(kPoisonCanary, std::memory_order_relaxed);
        n->key = kPoisonKey;
      }
      p->canary.store(kPoisonCanary, std::memory_order_relaxed);
      p->key = kPoisonKey;
    },
    [](Retirable *r) {
      auto *p = static_cast<PredecessorNode *>(r);
      NotifyNode *n = p->notify_head.load();
      while (n != nullptr) {
        NotifyNode *next = n->next;
        delete n;
        n = next;
      }
      delete p;
    }};

template <typename T>
bool contains(const std::vector<T> &v, const T &x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

LockFreeTrie::LockFreeTrie(unsigned k, std::size_t processes)
    : k_{k},
      n_{processes},
      reclaimer_{processes},
      uall_head_{UpdateType::kDelete, kMinusInfinity, 1},
      uall_tail_{UpdateType::kDelete, kPlusInfinity, 1},
      ruall_head_{UpdateType::kDelete, kPlusInfinity, 1},
      ruall_tail_{UpdateType::kDelete, kMinusInfinity, 1},
      uall_{&uall_head_, &uall_tail_, processes},
      ruall_{&ruall_head_, &ruall_tail_, processes},
      pall_{&pall_head_, &pall_tail_},
      local_{std::make_unique<Local[]>(processes)} {
  if (k < 1 || k > kMaxK) throw std::invalid_argument("trie height must be in 1..24");
  const std::size_t leaves = std::size_t{1} << k;
  latest_ = std::make_unique<std::atomic<UpdateNode *>[]>(leaves);
  trie_ = std::make_unique<std::atomic<UpdateNode *>[]>(leaves);
  pall_head_.key = kPlusInfinity;
  pall_tail_.key = kMinusInfinity;
  for (std::size_t x = 0; x < leaves; ++x) {
    auto *d = new UpdateNode(UpdateType::kDelete, static_cast<Key>(x), k + 1);
    d->active.store(true, std::memory_order_relaxed);
    d->upper0.store(static_cast<int>(k), std::memory_order_relaxed);
    d->dcount.store(1, std::memory_order_relaxed);
    latest_[x].store(d, std::memory_order_relaxed);
  }
  // Each TrieNode starts out referencing the DelNode of its leftmost leaf.
  for (unsigned h = 1; h <= k; ++h) {
    for (std::size_t pos = 0; pos < (leaves >> h); ++pos) {
      UpdateNode *d = latest_[pos << h].load(std::memory_order_relaxed);
      d->dcount.fetch_add(1, std::memory_order_relaxed);
      trie_[(std::size_t{1} << (k - h)) + pos].store(d, std::memory_order_relaxed);
    }
  }
}

LockFreeTrie::~LockFreeTrie() {
  reclaimer_.drain_all();
  std::unordered_set<UpdateNode *> live;
  const std::size_t leaves = std::size_t{1} << k_;
  for (std::size_t x = 0; x < leaves; ++x) {
    UpdateNode *u = latest_[x].load();
    live.insert(u);
    if (UpdateNode *v = u->latest_next.load()) live.insert(v);
  }
  for (std::size_t i = 1; i < leaves; ++i) live.insert(trie_[i].load());
  for (UpdateNode *u : live) delete u;
  for (std::size_t p = 0; p < n_; ++p) {
    delete local_[p].spare_insert;
    delete local_[p].spare_delete;
    delete local_[p].spare_notify;
  }
}

ProcessId LockFreeTrie::register_thread() {
  const std::size_t id = registered_.fetch_add(1);
  if (id >= n_) throw std::length_error("more threads registered than configured");
  return static_cast<ProcessId>(id);
}

void LockFreeTrie::check_key(Key x) const {
  if (x < 0 || x >= universe()) throw std::out_of_range("key outside universe");
}

UpdateNode *LockFreeTrie::first_active(Key x) const {
  UpdateNode *u = latest_[x].load();
  check_live(u);
  if (u->active.load()) return u;
  UpdateNode *v = u->latest_next.load();
  return v != nullptr ? v : u;
}

bool LockFreeTrie::interpreted_bit(unsigned height, Key pos) const {
  if (height == 0) return first_active(pos)->type == UpdateType::kInsert;
  UpdateNode *d = trie_[(std::size_t{1} << (k_ - height)) + static_cast<std::size_t>(pos)].load();
  check_live(d);
  UpdateNode *u = first_active(d->key.load(std::memory_order_relaxed));
  if (u->type == UpdateType::kInsert) return true;
  const int h = static_cast<int>(height);
  return h >= static_cast<int>(u->lower1.read()) || h > u->upper0.load();
}

std::optional<Key> LockFreeTrie::relaxed_predecessor(Key x) const {
  Key pos = x;
  for (unsigned h = 0; h < k_; ++h, pos >>= 1) {
    if ((pos & 1) == 0 || !interpreted_bit(h, pos - 1)) continue;
    Key p = pos - 1;
    for (unsigned hh = h; hh > 0; --hh) {
      if (interpreted_bit(hh - 1, 2 * p + 1))
        p = 2 * p + 1;
      else if (interpreted_bit(hh - 1, 2 * p))
        p = 2 * p;
      else
        return std::nullopt;
    }
    return p;
  }
  return kNoKey;
}

void LockFreeTrie::dcount_decrement(ProcessId pid, UpdateNode *d) {
  const std::int64_t left = d->dcount.fetch_sub(1) - 1;
  if (left == 0)
    reclaimer_.reclaim_later(pid, d, kUpdateKind);
  else if (left < 0)
    debug::counters().dcount_underflow.fetch_add(1, std::memory_order_relaxed);
}

void LockFreeTrie::release_displaced(ProcessId pid, UpdateNode *old) {
  if (old->type == UpdateType::kInsert)
    reclaimer_.reclaim_later(pid, old, kUpdateKind);
  else
    dcount_decrement(pid, old);
}

void LockFreeTrie::activate(ProcessId pid, UpdateNode *u) {
  uall_.insert(pid, u);
  ruall_.insert(pid, u);
  u->active.store(true);
  debug::sched_point(debug::Site::kLatestSwap);
  if (UpdateNode *old = u->latest_next.exchange(nullptr)) release_displaced(pid, old);
}

void LockFreeTrie::help_pending(ProcessId pid, UpdateNode *winner, UpdateNode *prev) {
  check_live(winner);
  if (winner->latest_next.load() == prev) activate(pid, winner);
}

UpdateNode *LockFreeTrie::take_insert(ProcessId pid, Key x, UpdateNode *prev) {
  Local &local = local_[pid];
  UpdateNode *u = local.spare_insert;
  if (u == nullptr) {
    u = new UpdateNode(UpdateType::kInsert, x, k_ + 1);
    local.spare_insert = u;
  }
  u->key.store(x, std::memory_order_relaxed);
  u->latest_next.store(prev, std::memory_order_relaxed);
  u->target.store(nullptr, std::memory_order_relaxed);
  u->target_key.store(kNoKey, std::memory_order_relaxed);
  return u;
}

UpdateNode *LockFreeTrie::take_delete(ProcessId pid, Key x, UpdateNode *prev) {
  Local &local = local_[pid];
  UpdateNode *d = local.spare_delete;
  if (d == nullptr) {
    d = new UpdateNode(UpdateType::kDelete, x, k_ + 1);
    local.spare_delete = d;
  }
  d->key.store(x, std::memory_order_relaxed);
  d->latest_next.store(prev, std::memory_order_relaxed);
  d->stop.store(false, std::memory_order_relaxed);
  d->upper0.store(0, std::memory_order_relaxed);
  d->lower1.reset();
  d->dcount.store(2, std::memory_order_relaxed);
  return d;
}

bool LockFreeTrie::search(ProcessId pid, Key x) {
  check_key(x);
  OpScope scope{reclaimer_, pid};
  return first_active(x)->type == UpdateType::kInsert;
}

bool LockFreeTrie::insert(ProcessId pid, Key x) {
  check_key(x);
  OpScope scope{reclaimer_, pid};
  UpdateNode *head = latest_[x].load();
  check_live(head);
  UpdateNode *fa = head;
  if (!head->active.load()) {
    if (UpdateNode *v = head->latest_next.load()) fa = v;
  }
  if (fa->type == UpdateType::kInsert) return false;
  if (head != fa) {
    help_pending(pid, head, fa);
    return false;
  }
  UpdateNode *inode = take_insert(pid, x, fa);
  UpdateNode *expected = fa;
  debug::sched_point(debug::Site::kLatestCas);
  if (!latest_[x].compare_exchange_strong(expected, inode)) {
    help_pending(pid, expected, fa);
    return false;
  }
  local_[pid].spare_insert = nullptr;
  activate(pid, inode);

  for (unsigned h = 1; h <= k_; ++h) {
    UpdateNode *d = trie_node(h, x).load();
    check_live(d);
    const Key z = d->key.load(std::memory_order_relaxed);
    UpdateNode *u = first_active(z);
    const int hi = static_cast<int>(h);
    if (u->type == UpdateType::kDelete && u->upper0.load() >= hi &&
        static_cast<int>(u->lower1.read()) > hi) {
      inode->target_key.store(z);
      inode->target.store(u);
      if (first_active(x) != inode) break;
      u->lower1.min_write(h);
    }
  }
  notify_all(pid, inode);
  uall_.remove(inode);
  ruall_.remove(inode);
  return true;
}

bool LockFreeTrie::remove(ProcessId pid, Key x) {
  check_key(x);
  OpScope scope{reclaimer_, pid};
  UpdateNode *head = latest_[x].load();
  check_live(head);
  UpdateNode *fa = head;
  if (!head->active.load()) {
    if (UpdateNode *v = head->latest_next.load()) fa = v;
  }
  if (fa->type == UpdateType::kDelete) return false;
  if (head != fa) {
    help_pending(pid, head, fa);
    return false;
  }
  UpdateNode *inode = fa;

  PredecessorNode *p1 = nullptr;
  const Key pred1 = predecessor_impl(pid, x, p1);
  UpdateNode *dnode = take_delete(pid, x, inode);
  dnode->del_pred_node.store(p1);
  dnode->del_pred.store(pred1);
  dnode->del_pred2.store(kNoKey);

  if (!Uall::is_marked(inode)) notify_all(pid, inode);

  UpdateNode *expected = inode;
  debug::sched_point(debug::Site::kLatestCas);
  if (!latest_[x].compare_exchange_strong(expected, dnode)) {
    help_pending(pid, expected, inode);
    pall_.remove(p1);
    retire_predecessor(pid, p1);
    return false;
  }
  local_[pid].spare_delete = nullptr;
  activate(pid, dnode);

  if (UpdateNode *t = inode->target.load()) {
    const Key tk = inode->target_key.load();
    if (tk >= 0 && tk < universe() && first_active(tk) == t) t->stop.store(true);
  }

  PredecessorNode *p2 = nullptr;
  dnode->del_pred2.store(predecessor_impl(pid, x, p2));

  const Key k1 = static_cast<Key>(k_) + 1;
  for (unsigned h = 1; h <= k_; ++h) {
    auto &t = trie_node(h, x);
    const Key left = (x >> h) << 1;
    bool halt = false;
    for (int attempt = 0;; ++attempt) {
      UpdateNode *old = t.load();
      if (interpreted_bit(h - 1, left) || interpreted_bit(h - 1, left + 1) ||
          dnode->stop.load() || first_active(x) != dnode ||
          static_cast<Key>(dnode->lower1.read()) != k1) {
        halt = true;
        break;
      }
      dnode->dcount.fetch_add(1);
      debug::sched_point(debug::Site::kTrieNodeCas);
      if (t.compare_exchange_strong(old, dnode)) {
        dcount_decrement(pid, old);
        if (!interpreted_bit(h - 1, left) && !interpreted_bit(h - 1, left + 1))
          dnode->upper0.store(static_cast<int>(h));
        break;
      }
      dnode->dcount.fetch_sub(1);
      if (attempt == 1) {
        halt = true;
        break;
      }
    }
    if (halt) break;
  }

  notify_all(pid, dnode);
  uall_.remove(dnode);
  ruall_.remove(dnode);
  dcount_decrement(pid, dnode);
  pall_.remove(p1);
  pall_.remove(p2);
  retire_predecessor(pid, p1);
  retire_predecessor(pid, p2);
  return true;
}

void LockFreeTrie::notify_all(ProcessId pid, UpdateNode *u) {
  Local &local = local_[pid];
  const Key key = u->key.load(std::memory_order_relaxed);
  local.ikeys.clear();
  for (UpdateNode *v = uall_.first(); v != nullptr; v = uall_.read_next(v)) {
    if (v->type != UpdateType::kInsert) continue;
    const Key vk = v->key.load(std::memory_order_relaxed);
    if (first_active(vk) == v) local.ikeys.push_back(vk);
  }
  const bool is_insert = u->type == UpdateType::kInsert;
  for (PredecessorNode *q = pall_.first(); q != nullptr && first_active(key) == u;
       q = pall_.read_next(q)) {
    check_live(q);
    NotifyNode *n = local.spare_notify;
    if (n == nullptr) n = new NotifyNode;
    n->update = u;
    n->key = key;
    n->update_is_insert = is_insert;
    n->update_max = kNoKey;
    for (Key ik : local.ikeys)
      if (ik < q->key && ik > n->update_max) n->update_max = ik;
    n->threshold = q->cursor.read(ruall_)->key.load(std::memory_order_relaxed);
    local.spare_notify = n;
    for (;;) {
      NotifyNode *h = q->notify_head.load();
      n->next = h;
      debug::sched_point(debug::Site::kNotifyPush);
      if (q->notify_head.compare_exchange_strong(h, n)) {
        local.spare_notify = nullptr;
        break;
      }
      if (first_active(key) != u) break;
    }
  }
}

void LockFreeTrie::retire_predecessor(ProcessId pid, PredecessorNode *p) {
  reclaimer_.reclaim_later(pid, p, kPredecessorKind);
}

Key LockFreeTrie::predecessor(ProcessId pid, Key x) {
  check_key(x);
  OpScope scope{reclaimer_, pid};
  PredecessorNode *p = nullptr;
  const Key result = predecessor_impl(pid, x, p);
  pall_.remove(p);
  retire_predecessor(pid, p);
  return result;
}

Key LockFreeTrie::predecessor_impl(ProcessId pid, Key x, PredecessorNode *&pnode) {
  Local &local = local_[pid];
  auto *p = new PredecessorNode;
  p->key = x;
  p->cursor.reset(&ruall_head_);
  pnode = p;
  pall_.insert(p);

  local.pall_seen.clear();
  for (PredecessorNode *q = pall_.read_next(p); q != nullptr; q = pall_.read_next(q)) {
    check_live(q);
    local.pall_seen.push_back(q);
  }

  local.i_ruall.clear();
  local.d_ruall.clear();
  for (UpdateNode *u = p->cursor.copy_next(ruall_, &ruall_head_); u != &ruall_tail_;
       u = p->cursor.copy_next(ruall_, u)) {
    check_live(u);
    const Key uk = u->key.load(std::memory_order_relaxed);
    if (uk >= x || first_active(uk) != u) continue;
    (u->type == UpdateType::kInsert ? local.i_ruall : local.d_ruall).push_back(u);
  }

  const std::optional<Key> r = relaxed_predecessor(x);

  Key best = kNoKey;
  for (UpdateNode *u = uall_.first(); u != nullptr; u = uall_.read_next(u)) {
    const Key uk = u->key.load(std::memory_order_relaxed);
    if (uk >= x) break;
    if (first_active(uk) != u) continue;
    if (u->type == UpdateType::kInsert || !contains(local.d_ruall, u)) best = std::max(best, uk);
  }

  for (NotifyNode *n = p->notify_head.load(); n != nullptr; n = n->next) {
    if (n->key < x) {
      if (n->update_is_insert ? n->threshold <= n->key
                              : n->threshold < n->key && !contains(local.d_ruall, n->update))
        best = std::max(best, n->key);
    }
    if (n->threshold == kMinusInfinity && !contains(local.i_ruall, n->update) &&
        !contains(local.d_ruall, n->update))
      best = std::max(best, n->update_max);
  }

  if (local.d_ruall.empty() || r.has_value()) return std::max(best, r.value_or(kNoKey));
  return std::max(best, resolve_with_graph(local, p, x));
}

Key LockFreeTrie::resolve_with_graph(Local &local, PredecessorNode *own, Key x) {
  PredecessorNode *chosen = nullptr;
  for (PredecessorNode *q : local.pall_seen) {
    for (UpdateNode *d : local.d_ruall) {
      if (d->del_pred_node.load() == q) {
        chosen = q;
        break;
      }
    }
  }

  local.l1.clear();
  if (chosen != nullptr) {
    for (NotifyNode *n = chosen->notify_head.load(); n != nullptr; n = n->next) {
      check_live(n);
      if (n->key < x) local.l1.push_back(n->update);
    }
  }
  local.l_rem.clear();
  local.l2.clear();
  for (NotifyNode *n = own->notify_head.load(); n != nullptr; n = n->next) {
    if (n->key >= x) continue;
    local.l_rem.push_back(n->update);
    if (n->threshold >= n->key) local.l2.push_back(n->update);
  }

  // Oldest first: L1 minus L_rem, then L2.
  std::vector<UpdateNode *> &lp = local.l;
  lp.clear();
  for (auto it = local.l1.rbegin(); it != local.l1.rend(); ++it)
    if (!contains(local.l_rem, *it)) lp.push_back(*it);
  for (auto it = local.l2.rbegin(); it != local.l2.rend(); ++it) lp.push_back(*it);

  std::unordered_map<Key, Key> edge;
  std::unordered_map<Key, std::size_t> last_of_key;
  for (std::size_t i = 0; i < lp.size(); ++i)
    last_of_key[lp[i]->key.load(std::memory_order_relaxed)] = i;

  std::vector<Key> sources;
  for (UpdateNode *d : local.d_ruall) sources.push_back(d->del_pred.load());
  for (std::size_t i = 0; i < lp.size(); ++i) {
    UpdateNode *u = lp[i];
    check_live(u);
    const Key uk = u->key.load(std::memory_order_relaxed);
    if (u->type == UpdateType::kInsert) {
      sources.push_back(uk);
    } else if (last_of_key[uk] == i) {
      edge[uk] = u->del_pred2.load();
    }
  }

  std::unordered_set<Key> excluded;
  for (UpdateNode *d : local.d_ruall) excluded.insert(d->key.load(std::memory_order_relaxed));

  Key result = kNoKey;
  std::unordered_set<Key> visited;
  for (Key v : sources) {
    while (visited.insert(v).second) {
      auto e = edge.find(v);
      if (e == edge.end()) {
        if (!excluded.count(v)) result = std::max(result, v);
        break;
      }
      v = e->second;
    }
  }
  return result;
}

std::size_t LockFreeTrie::size_slow() const {
  std::size_t n = 0;
  for (Key x = 0; x < universe(); ++x)
    if (first_active(x)->type == UpdateType::kInsert) ++n;
  return n;
}

bool LockFreeTrie::check_quiescent(std::string *why) const {
  auto fail = [&](std::string msg) {
    if (why != nullptr) *why = std::move(msg);
    return false;
  };
  for (Key x = 0; x < universe(); ++x) {
    UpdateNode *u = latest_[x].load();
    if (!u->active.load()) return fail("inactive LatestList head at " + std::to_string(x));
    if (u->latest_next.load() != nullptr)
      return fail("LatestList longer than one at " + std::to_string(x));
    if (u->key.load() != x) return fail("LatestList key mismatch at " + std::to_string(x));
  }
  for (unsigned h = 1; h <= k_; ++h) {
    for (Key pos = 0; pos < (universe() >> h); ++pos) {
      const bool bit = interpreted_bit(h, pos);
      const bool any = interpreted_bit(h - 1, 2 * pos) || interpreted_bit(h - 1, 2 * pos + 1);
      if (bit != any)
        return fail("interpreted bit mismatch at height " + std::to_string(h) + " position " +
                    std::to_string(pos));
      UpdateNode *d = trie_[(std::size_t{1} << (k_ - h)) + static_cast<std::size_t>(pos)].load();
      const Key dk = d->key.load();
      if ((dk >> h) != pos) return fail("TrieNode references key outside its subtree");
    }
  }
  if (uall_.first() != nullptr || ruall_.first() != nullptr)
    return fail("update announcement list not empty");
  if (pall_.first() != nullptr) return fail("predecessor announcement list not empty");
  return true;
}

}  // namespace kotrie
