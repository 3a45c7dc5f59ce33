#ifndef KOTRIE_RECLAIM_HPP
#define KOTRIE_RECLAIM_HPP

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "kotrie/common.hpp"
#include "kotrie/debug.hpp"

namespace kotrie {

inline constexpr std::uint32_t kLiveCanary = 0x4c495645u;
inline constexpr std::uint32_t kPoisonCanary = 0xdeadbeefu;
inline constexpr Key kPoisonKey = static_cast<Key>(0x5a5a5a5a5a5a5a5aLL);

/// Base of every record handed to the reclaimer.
struct Retirable {
  std::atomic<std::uint32_t> canary{kLiveCanary};
  std::atomic<bool> bagged{false};
};

inline void check_live(const Retirable *r) noexcept {
  if (debug::poison_enabled() && r != nullptr &&
      r->canary.load(std::memory_order_relaxed) != kLiveCanary)
    debug::counters().poison_reads.fetch_add(1, std::memory_order_relaxed);
}

/// Type-erased destructor dispatch for one record type.
struct RecordKind {
  const char *name;
  /// Overwrites identifying fields. Must leave the memory freeable by destroy.
  void (*poison)(Retirable *);
  void (*destroy)(Retirable *);
};

/// DEBRA with a fixed number of limbo bags per process.
class EpochReclaimer {
 public:
  static constexpr unsigned kBags = 5;
  static constexpr std::size_t kQuarantine = 1u << 14;

  explicit EpochReclaimer(std::size_t processes);
  ~EpochReclaimer();

  EpochReclaimer(const EpochReclaimer &) = delete;
  EpochReclaimer &operator=(const EpochReclaimer &) = delete;

  void start_op(ProcessId pid);
  void end_op(ProcessId pid);

  /// Retires `r`, which must no longer be reachable by operations that start
  /// after this call.
  void reclaim_later(ProcessId pid, Retirable *r, const RecordKind &kind);

  /// Frees everything held for `pid`. Caller guarantees no operation by any
  /// process is in progress.
  void drain(ProcessId pid);
  void drain_all();

  [[nodiscard]] std::uint64_t epoch() const noexcept {
    return epoch_.load(std::memory_order_seq_cst);
  }
  [[nodiscard]] std::size_t processes() const noexcept { return n_; }
  [[nodiscard]] std::size_t pending(ProcessId pid) const;
  [[nodiscard]] std::size_t pending_total() const;

  /// Announcement word of `pid`: ⟨epoch, quiescent⟩.
  [[nodiscard]] std::pair<std::uint64_t, bool> announcement(ProcessId pid) const;

 private:
  struct Entry {
    Retirable *record;
    const RecordKind *kind;
    std::uint64_t bagged_epoch;
  };

  struct alignas(kCacheLine) Announce {
    std::atomic<std::uint64_t> word{1};
  };

  struct alignas(kCacheLine) Local {
    std::uint64_t e = ~std::uint64_t{0};
    std::size_t c = 1;
    unsigned bag = kBags - 1;
    std::vector<Entry> bags[kBags];
    std::deque<Entry> quarantine;
  };

  static constexpr std::uint64_t pack(std::uint64_t e, bool quiescent) noexcept {
    return (e << 1) | (quiescent ? 1u : 0u);
  }

  void rotate_and_reclaim(ProcessId pid);
  void dispose(Local &local, const Entry &entry);
  void free_quarantine(Local &local);
  void announce(ProcessId pid, std::uint64_t e, bool quiescent);
  bool try_increment(std::uint64_t e);

  std::size_t n_;
  bool shadow_;
  alignas(kCacheLine) std::atomic<std::uint64_t> epoch_{0};
  std::unique_ptr<Announce[]> announce_;
  std::unique_ptr<Local[]> local_;

  // Shadow check of epoch-increment soundness, active in poison mode.
  std::mutex shadow_mu_;
  std::vector<char> shadow_ok_;
};

/// Brackets one data structure operation.
class OpScope {
 public:
  OpScope(EpochReclaimer &r, ProcessId pid) : r_{r}, pid_{pid} { r_.start_op(pid_); }
  ~OpScope() { r_.end_op(pid_); }
  OpScope(const OpScope &) = delete;
  OpScope &operator=(const OpScope &) = delete;

 private:
  EpochReclaimer &r_;
  ProcessId pid_;
};

/// RecordKind for a plain type whose only identifying field is its canary.
template <typename T>
const RecordKind &plain_kind(const char *name) {
  static const RecordKind kind{
      name,
      [](Retirable *r) {
        r->canary.store(kPoisonCanary, std::memory_order_relaxed);
      },
      [](Retirable *r) { delete static_cast<T *>(r); }};
  return kind;
}

}  // namespace kotrie

#endif  // KOTRIE_RECLAIM_HPP
