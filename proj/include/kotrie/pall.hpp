#ifndef KOTRIE_PALL_HPP
#define KOTRIE_PALL_HPP

#include <atomic>
#include <cstdint>

#include "kotrie/alist.hpp"
#include "kotrie/debug.hpp"

namespace kotrie {

/// Position of a predecessor operation in the descending update list. The
/// owner advances it one node at a time; any reader may finish an advance
/// that is in progress.
template <typename UNode, typename List>
class RuallCursor {
 public:
  void reset(UNode *start) noexcept { data_.store(pack(start, false)); }

  /// Owner only. `u` must be the current value. Returns the new value.
  UNode *copy_next(const List &list, UNode *u) {
    data_.store(pack(u, true));
    UNode *succ = list.successor(u);
    std::uint64_t expected = pack(u, true);
    debug::sched_point(debug::Site::kCursorCopy);
    if (data_.compare_exchange_strong(expected, pack(succ, false))) return succ;
    return ptr(expected);
  }

  UNode *read(const List &list) {
    std::uint64_t w = data_.load();
    if (!copying(w)) return ptr(w);
    UNode *succ = list.successor(ptr(w));
    debug::sched_point(debug::Site::kCursorComplete);
    if (data_.compare_exchange_strong(w, pack(succ, false))) return succ;
    return ptr(w);
  }

  std::uint64_t raw() const noexcept { return data_.load(); }

 private:
  static std::uint64_t pack(UNode *p, bool c) noexcept {
    return reinterpret_cast<std::uint64_t>(p) | (c ? 1u : 0u);
  }
  static UNode *ptr(std::uint64_t w) noexcept {
    return reinterpret_cast<UNode *>(w & ~std::uint64_t{1});
  }
  static bool copying(std::uint64_t w) noexcept { return (w & 1) != 0; }

  std::atomic<std::uint64_t> data_{0};
};

/// Unsorted lock-free list, newest first. Each node is inserted and removed
/// at most once, both by its owner.
///
/// `PNode` must have members `std::atomic<std::uint64_t> succ` and
/// `std::atomic<PNode *> backlink`.
template <typename PNode>
class PredecessorList {
 public:
  PredecessorList(PNode *head, PNode *tail) : head_{head}, tail_{tail} {
    head_->succ.store(link_word::make(tail_, LinkState::kNormal));
    tail_->succ.store(0);
  }

  PredecessorList(const PredecessorList &) = delete;
  PredecessorList &operator=(const PredecessorList &) = delete;

  PNode *head() const noexcept { return head_; }
  PNode *tail() const noexcept { return tail_; }

  void insert(PNode *p) {
    using namespace link_word;
    for (;;) {
      std::uint64_t w = head_->succ.load();
      if (state(w) == LinkState::kDelFlag) {
        help_remove(head_, link<PNode>(w));
        continue;
      }
      p->succ.store(make(link<PNode>(w), LinkState::kNormal));
      debug::sched_point(debug::Site::kPallPush);
      if (head_->succ.compare_exchange_strong(w, make(p, LinkState::kNormal))) return;
    }
  }

  void remove(PNode *p) {
    using namespace link_word;
    PNode *curr = head_;
    for (;;) {
      std::uint64_t w = curr->succ.load();
      PNode *next = link<PNode>(w);
      switch (state(w)) {
        case LinkState::kNormal:
          if (next == tail_) return;
          if (next != p) {
            curr = next;
            break;
          }
          if (curr->succ.compare_exchange_strong(w, make(p, LinkState::kDelFlag))) {
            help_remove(curr, p);
            return;
          }
          break;
        case LinkState::kDelFlag:
          help_remove(curr, next);
          if (next == p) return;
          break;
        case LinkState::kMarked: {
          PNode *prev = curr->backlink.load();
          if (prev->succ.load() == make(curr, LinkState::kDelFlag)) help_marked(prev, curr);
          curr = prev;
          break;
        }
        case LinkState::kInsFlag:
          return;
      }
    }
  }

  PNode *read_next(PNode *p) const {
    PNode *next = link_word::link<PNode>(p->succ.load());
    return next == tail_ ? nullptr : next;
  }
  PNode *first() const { return read_next(head_); }

 private:
  static void help_marked(PNode *prev, PNode *del) {
    using namespace link_word;
    PNode *del_next = link<PNode>(del->succ.load());
    std::uint64_t expected = make(del, LinkState::kDelFlag);
    prev->succ.compare_exchange_strong(expected, make(del_next, LinkState::kNormal));
  }

  static void help_remove(PNode *prev, PNode *del) {
    using namespace link_word;
    del->backlink.store(prev);
    for (;;) {
      std::uint64_t w = del->succ.load();
      const LinkState s = state(w);
      if (s == LinkState::kMarked) break;
      if (s == LinkState::kDelFlag) {
        help_remove(del, link<PNode>(w));
        continue;
      }
      del->succ.compare_exchange_strong(w, make(link<PNode>(w), LinkState::kMarked));
    }
    help_marked(prev, del);
  }

  PNode *head_;
  PNode *tail_;
};

}  // namespace kotrie

#endif  // KOTRIE_PALL_HPP
