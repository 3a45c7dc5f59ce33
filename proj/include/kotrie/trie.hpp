#ifndef KOTRIE_TRIE_HPP
#define KOTRIE_TRIE_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kotrie/alist.hpp"
#include "kotrie/common.hpp"
#include "kotrie/minreg.hpp"
#include "kotrie/pall.hpp"
#include "kotrie/reclaim.hpp"

namespace kotrie {

enum class UpdateType : std::uint8_t { kInsert, kDelete };

struct PredecessorNode;

struct UpdateNode : Retirable {
  // LatestList
  alignas(kCacheLine) std::atomic<UpdateNode *> latest_next{nullptr};
  std::atomic<bool> active{false};
  std::atomic<Key> key{0};
  UpdateType type;

  // UALL
  alignas(kCacheLine) std::atomic<std::uint64_t> next{0};
  std::atomic<UpdateNode *> backlink{nullptr};

  // RUALL
  alignas(kCacheLine) std::atomic<std::uint64_t> rnext{0};
  std::atomic<UpdateNode *> rbacklink{nullptr};

  // InsertNode
  alignas(kCacheLine) std::atomic<UpdateNode *> target{nullptr};
  std::atomic<Key> target_key{kNoKey};
  // DelNode
  std::atomic<bool> stop{false};
  std::atomic<int> upper0{0};
  FlatMinRegister lower1;
  std::atomic<PredecessorNode *> del_pred_node{nullptr};
  std::atomic<Key> del_pred{kNoKey};
  std::atomic<Key> del_pred2{kNoKey};
  std::atomic<std::int64_t> dcount{0};

  UpdateNode(UpdateType t, Key k, unsigned lower1_bits)
      : key{k}, type{t}, lower1{lower1_bits} {}
};

struct NotifyNode : Retirable {
  UpdateNode *update = nullptr;
  Key key = 0;
  Key update_max = kNoKey;
  Key threshold = kPlusInfinity;
  bool update_is_insert = false;
  NotifyNode *next = nullptr;
};

struct UallFields {
  static std::atomic<std::uint64_t> &next(UpdateNode &n) { return n.next; }
  static std::atomic<UpdateNode *> &backlink(UpdateNode &n) { return n.backlink; }
  static Key key(const UpdateNode &n) { return n.key.load(std::memory_order_relaxed); }
  static bool before(Key a, Key b) { return a < b; }
  static void check(const UpdateNode *n) { check_live(n); }
};

struct RuallFields {
  static std::atomic<std::uint64_t> &next(UpdateNode &n) { return n.rnext; }
  static std::atomic<UpdateNode *> &backlink(UpdateNode &n) { return n.rbacklink; }
  static Key key(const UpdateNode &n) { return n.key.load(std::memory_order_relaxed); }
  static bool before(Key a, Key b) { return a > b; }
  static void check(const UpdateNode *n) { check_live(n); }
};

using Uall = AnnouncementList<UpdateNode, UallFields>;
using Ruall = AnnouncementList<UpdateNode, RuallFields>;

struct PredecessorNode : Retirable {
  Key key = 0;
  // PALL
  alignas(kCacheLine) std::atomic<std::uint64_t> succ{0};
  std::atomic<PredecessorNode *> backlink{nullptr};
  // notify list
  alignas(kCacheLine) std::atomic<NotifyNode *> notify_head{nullptr};
  // RUALL position
  alignas(kCacheLine) RuallCursor<UpdateNode, Ruall> cursor;
};

using Pall = PredecessorList<PredecessorNode>;

/// Lock-free binary trie over the universe {0, ..., 2^k - 1}.
class LockFreeTrie {
 public:
  static constexpr unsigned kMaxK = 24;

  explicit LockFreeTrie(unsigned k, std::size_t processes = kDefaultMaxProcesses);
  ~LockFreeTrie();

  LockFreeTrie(const LockFreeTrie &) = delete;
  LockFreeTrie &operator=(const LockFreeTrie &) = delete;

  /// Throws std::length_error once `processes` threads have registered.
  ProcessId register_thread();

  bool search(ProcessId pid, Key x);
  bool insert(ProcessId pid, Key x);
  bool remove(ProcessId pid, Key x);
  /// Largest key < x in the set, or kNoKey.
  Key predecessor(ProcessId pid, Key x);

  /// Frees records retired by `pid`. Only at quiescence.
  void drain(ProcessId pid) { reclaimer_.drain(pid); }

  [[nodiscard]] unsigned k() const noexcept { return k_; }
  [[nodiscard]] Key universe() const noexcept { return Key{1} << k_; }
  [[nodiscard]] std::size_t processes() const noexcept { return n_; }
  EpochReclaimer &reclaimer() noexcept { return reclaimer_; }

  /// Predecessor computed from interpreted bits alone; nullopt means the
  /// walk hit a node whose children are both 0.
  std::optional<Key> relaxed_predecessor(Key x) const;
  /// Interpreted bit of the node at `height` (0 = leaf) covering `pos`.
  bool interpreted_bit(unsigned height, Key pos) const;

  /// Quiescent-only inspection.
  std::size_t size_slow() const;
  bool check_quiescent(std::string *why) const;

 private:
  struct alignas(kCacheLine) Local {
    UpdateNode *spare_insert = nullptr;
    UpdateNode *spare_delete = nullptr;
    NotifyNode *spare_notify = nullptr;
    std::vector<Key> ikeys;
    std::vector<PredecessorNode *> pall_seen;
    std::vector<UpdateNode *> i_ruall;
    std::vector<UpdateNode *> d_ruall;
    std::vector<UpdateNode *> l1;
    std::vector<UpdateNode *> l2;
    std::vector<UpdateNode *> l_rem;
    std::vector<UpdateNode *> l;
  };

  UpdateNode *first_active(Key x) const;
  std::atomic<UpdateNode *> &trie_node(unsigned height, Key x) const {
    return trie_[(std::size_t{1} << (k_ - height)) + static_cast<std::size_t>(x >> height)];
  }

  void activate(ProcessId pid, UpdateNode *u);
  void help_pending(ProcessId pid, UpdateNode *winner, UpdateNode *prev);
  void release_displaced(ProcessId pid, UpdateNode *old);
  void dcount_decrement(ProcessId pid, UpdateNode *d);
  void notify_all(ProcessId pid, UpdateNode *u);
  Key predecessor_impl(ProcessId pid, Key x, PredecessorNode *&pnode);
  Key resolve_with_graph(Local &local, PredecessorNode *own, Key x);
  void retire_predecessor(ProcessId pid, PredecessorNode *p);
  void check_key(Key x) const;

  UpdateNode *take_insert(ProcessId pid, Key x, UpdateNode *prev);
  UpdateNode *take_delete(ProcessId pid, Key x, UpdateNode *prev);

  unsigned k_;
  std::size_t n_;
  EpochReclaimer reclaimer_;
  std::unique_ptr<std::atomic<UpdateNode *>[]> latest_;
  std::unique_ptr<std::atomic<UpdateNode *>[]> trie_;

  UpdateNode uall_head_, uall_tail_, ruall_head_, ruall_tail_;
  PredecessorNode pall_head_, pall_tail_;
  Uall uall_;
  Ruall ruall_;
  Pall pall_;

  std::unique_ptr<Local[]> local_;
  std::atomic<std::size_t> registered_{0};
};

}  // namespace kotrie

#endif  // KOTRIE_TRIE_HPP
