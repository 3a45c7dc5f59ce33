#ifndef KOTRIE_ALIST_HPP
#define KOTRIE_ALIST_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kotrie/common.hpp"
#include "kotrie/debug.hpp"

namespace kotrie {

enum class LinkState : std::uint64_t {
  kNormal = 0,
  kInsFlag = 1,
  kDelFlag = 2,
  kMarked = 3,
};

/// Single-word ⟨link, state⟩ or, for InsFlag, ⟨seq, pid, state⟩.
namespace link_word {

inline constexpr std::uint64_t kStateMask = 0x7;
inline constexpr unsigned kPidShift = 3;
inline constexpr unsigned kPidBits = 16;
inline constexpr unsigned kSeqShift = kPidShift + kPidBits;
inline constexpr std::uint64_t kMaxSeq = (std::uint64_t{1} << (64 - kSeqShift)) - 1;
inline constexpr std::size_t kMaxPids = std::size_t{1} << kPidBits;

template <typename T>
constexpr std::uint64_t make(T *p, LinkState s) noexcept {
  return reinterpret_cast<std::uint64_t>(p) | static_cast<std::uint64_t>(s);
}
constexpr std::uint64_t make_insert(std::uint64_t seq, ProcessId pid) noexcept {
  return (seq << kSeqShift) | (std::uint64_t{pid} << kPidShift) |
         static_cast<std::uint64_t>(LinkState::kInsFlag);
}
constexpr LinkState state(std::uint64_t w) noexcept {
  return static_cast<LinkState>(w & kStateMask);
}
template <typename T>
T *link(std::uint64_t w) noexcept {
  return reinterpret_cast<T *>(w & ~kStateMask);
}
constexpr ProcessId pid(std::uint64_t w) noexcept {
  return static_cast<ProcessId>((w >> kPidShift) & (kMaxPids - 1));
}
constexpr std::uint64_t seq(std::uint64_t w) noexcept { return w >> kSeqShift; }

}  // namespace link_word

/// Per-process descriptor used to place a node into a list.
template <typename Node>
struct alignas(kCacheLine) InsertDesc {
  std::atomic<Node *> new_node{nullptr};
  std::atomic<Node *> next{nullptr};
  std::atomic<std::uint64_t> seq{0};
};

/// Lock-free sorted list of nodes in which many helpers may insert the same
/// node, and a removed node is never reinserted.
///
/// `Fields` supplies:
///   static std::atomic<std::uint64_t> &next(Node &);
///   static std::atomic<Node *> &backlink(Node &);
///   static Key key(const Node &);
///   static bool before(Key a, Key b);   // strict list order
///   static void check(const Node *);    // debug liveness hook
template <typename Node, typename Fields>
class AnnouncementList {
 public:
  AnnouncementList(Node *head, Node *tail, std::size_t processes)
      : head_{head}, tail_{tail}, n_{processes},
        desc_{std::make_unique<InsertDesc<Node>[]>(processes)} {
    if (processes == 0 || processes > link_word::kMaxPids)
      throw std::invalid_argument("process count out of range");
    Fields::next(*head_).store(link_word::make(tail_, LinkState::kNormal));
    Fields::next(*tail_).store(0);
  }

  AnnouncementList(const AnnouncementList &) = delete;
  AnnouncementList &operator=(const AnnouncementList &) = delete;

  Node *head() const noexcept { return head_; }
  Node *tail() const noexcept { return tail_; }

  void insert(ProcessId pid, Node *u);
  void remove(Node *u);

  /// Successor of `u` at some instant during the call, or nullptr for tail.
  Node *read_next(Node *u) const {
    Node *s = successor(u);
    return s == tail_ ? nullptr : s;
  }
  Node *first() const { return read_next(head_); }

  /// Like read_next but returns the tail sentinel itself.
  Node *successor(Node *u) const;

  static bool is_marked(Node *u) noexcept {
    return link_word::state(Fields::next(*u).load()) == LinkState::kMarked;
  }

  /// Number of successful CASes that linked a node in place of a descriptor.
  std::uint64_t links() const noexcept { return links_.load(std::memory_order_relaxed); }

 private:
  std::uint64_t help_marked(Node *prev, Node *del);
  std::uint64_t help_insert(Node *prev, std::uint64_t seq, ProcessId x);
  std::uint64_t help_remove(Node *prev, Node *del);
  Node *recover(Node *curr);

  static std::atomic<std::uint64_t> &next_of(Node *n) {
    Fields::check(n);
    return Fields::next(*n);
  }

  Node *head_;
  Node *tail_;
  std::size_t n_;
  std::unique_ptr<InsertDesc<Node>[]> desc_;
  mutable std::atomic<std::uint64_t> links_{0};
};

template <typename Node, typename Fields>
std::uint64_t AnnouncementList<Node, Fields>::help_marked(Node *prev, Node *del) {
  using namespace link_word;
  Node *del_next = link<Node>(next_of(del).load());
  std::uint64_t expected = make(del, LinkState::kDelFlag);
  const std::uint64_t desired = make(del_next, LinkState::kNormal);
  debug::sched_point(debug::Site::kListHelpMarked);
  if (next_of(prev).compare_exchange_strong(expected, desired)) return desired;
  return expected;
}

template <typename Node, typename Fields>
std::uint64_t AnnouncementList<Node, Fields>::help_insert(Node *prev, std::uint64_t seq,
                                                          ProcessId x) {
  using namespace link_word;
  InsertDesc<Node> &d = desc_[x];
  Node *new_node = d.new_node.load();
  Node *next = d.next.load();
  if (d.seq.load() != seq) return next_of(prev).load();
  std::uint64_t observed = 0;
  debug::sched_point(debug::Site::kListHelpInsertNode);
  next_of(new_node).compare_exchange_strong(observed, make(next, LinkState::kNormal));
  Node *new_next = state(observed) == LinkState::kMarked ? next : new_node;
  std::uint64_t expected = make_insert(seq, x);
  const std::uint64_t desired = make(new_next, LinkState::kNormal);
  debug::sched_point(debug::Site::kListHelpInsertPrev);
  if (next_of(prev).compare_exchange_strong(expected, desired)) {
    if (new_next == new_node) links_.fetch_add(1, std::memory_order_relaxed);
    return desired;
  }
  return expected;
}

template <typename Node, typename Fields>
std::uint64_t AnnouncementList<Node, Fields>::help_remove(Node *prev, Node *del) {
  using namespace link_word;
  // Explicit stack in place of recursion on consecutive flagged nodes.
  std::pair<Node *, Node *> inline_frames[8];
  std::vector<std::pair<Node *, Node *>> spill;
  std::size_t depth = 0;
  auto push = [&](Node *p, Node *d) {
    debug::sched_point(debug::Site::kListBacklink);
    Fields::backlink(*d).store(p);
    if (depth < 8)
      inline_frames[depth] = {p, d};
    else
      spill.emplace_back(p, d);
    ++depth;
  };
  auto top = [&]() -> std::pair<Node *, Node *> & {
    return depth <= 8 ? inline_frames[depth - 1] : spill[depth - 9];
  };
  auto pop = [&] {
    if (depth > 8) spill.pop_back();
    --depth;
  };

  push(prev, del);
  std::uint64_t result = 0;
  while (depth > 0) {
    auto [p, d] = top();
    std::uint64_t w = next_of(d).load();
    switch (state(w)) {
      case LinkState::kMarked:
        result = help_marked(p, d);
        pop();
        break;
      case LinkState::kInsFlag:
        help_insert(d, link_word::seq(w), link_word::pid(w));
        break;
      case LinkState::kDelFlag:
        push(d, link<Node>(w));
        break;
      case LinkState::kNormal: {
        debug::sched_point(debug::Site::kListMark);
        next_of(d).compare_exchange_strong(w, make(link<Node>(w), LinkState::kMarked));
        break;
      }
    }
  }
  return result;
}

template <typename Node, typename Fields>
Node *AnnouncementList<Node, Fields>::recover(Node *curr) {
  using namespace link_word;
  Node *prev = Fields::backlink(*curr).load();
  if (next_of(prev).load() == make(curr, LinkState::kDelFlag)) help_marked(prev, curr);
  return prev;
}

template <typename Node, typename Fields>
void AnnouncementList<Node, Fields>::insert(ProcessId pid, Node *u) {
  using namespace link_word;
  if (is_marked(u)) return;
  InsertDesc<Node> &d = desc_[pid];
  d.new_node.store(u);
  const std::uint64_t seq = d.seq.load();
  const Key key = Fields::key(*u);
  Node *curr = head_;
  for (;;) {
    std::uint64_t w = next_of(curr).load();
    switch (state(w)) {
      case LinkState::kNormal: {
        Node *next = link<Node>(w);
        if (next == u) return;
        Fields::check(next);
        if (!Fields::before(key, Fields::key(*next))) {
          curr = next;
          break;
        }
        if (is_marked(u)) return;
        d.next.store(next);
        debug::sched_point(debug::Site::kListFlagInsert);
        if (next_of(curr).compare_exchange_strong(w, make_insert(seq, pid))) {
          help_insert(curr, seq, pid);
          d.seq.store(seq + 1);
          return;
        }
        break;
      }
      case LinkState::kInsFlag:
        help_insert(curr, link_word::seq(w), link_word::pid(w));
        break;
      case LinkState::kDelFlag: {
        Node *next = link<Node>(w);
        if (next == u) return;
        help_remove(curr, next);
        break;
      }
      case LinkState::kMarked:
        curr = recover(curr);
        break;
    }
  }
}

template <typename Node, typename Fields>
void AnnouncementList<Node, Fields>::remove(Node *u) {
  using namespace link_word;
  const Key key = Fields::key(*u);
  Node *curr = head_;
  for (;;) {
    std::uint64_t w = next_of(curr).load();
    switch (state(w)) {
      case LinkState::kNormal: {
        Node *next = link<Node>(w);
        if (next != u) {
          Fields::check(next);
          if (Fields::before(key, Fields::key(*next))) return;
          curr = next;
          break;
        }
        debug::sched_point(debug::Site::kListFlagDelete);
        if (next_of(curr).compare_exchange_strong(w, make(u, LinkState::kDelFlag))) {
          help_remove(curr, u);
          return;
        }
        break;
      }
      case LinkState::kInsFlag:
        help_insert(curr, link_word::seq(w), link_word::pid(w));
        break;
      case LinkState::kDelFlag: {
        Node *next = link<Node>(w);
        if (next != u && Fields::before(key, Fields::key(*next))) return;
        help_remove(curr, next);
        if (next == u) return;
        break;
      }
      case LinkState::kMarked:
        curr = recover(curr);
        break;
    }
  }
}

template <typename Node, typename Fields>
Node *AnnouncementList<Node, Fields>::successor(Node *u) const {
  using namespace link_word;
  for (;;) {
    const std::uint64_t w = next_of(u).load();
    if (state(w) != LinkState::kInsFlag) return link<Node>(w);
    const InsertDesc<Node> &d = desc_[pid(w)];
    Node *next = d.next.load();
    debug::sched_point(debug::Site::kListReadNext);
    if (d.seq.load() == link_word::seq(w)) return next;
  }
}

}  // namespace kotrie

#endif  // KOTRIE_ALIST_HPP
