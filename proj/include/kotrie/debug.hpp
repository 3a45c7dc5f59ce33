#ifndef KOTRIE_DEBUG_HPP
#define KOTRIE_DEBUG_HPP

#include <atomic>
#include <cstdint>

namespace kotrie::debug {

/// Protocol steps at which a test harness may interpose.
enum class Site : std::uint8_t {
  kListHelpMarked,
  kListHelpInsertNode,
  kListHelpInsertPrev,
  kListMark,
  kListFlagInsert,
  kListFlagDelete,
  kListBacklink,
  kListReadNext,
  kPallPush,
  kCursorCopy,
  kCursorComplete,
  kLatestCas,
  kLatestSwap,
  kTrieNodeCas,
  kMinWrite,
  kNotifyPush,
  kSkipCas,
  kAugCas,
  kEpochCas,
  kCount
};

inline constexpr int kSiteCount = static_cast<int>(Site::kCount);

using SchedHook = void (*)(Site);

inline std::atomic<SchedHook> sched_hook{nullptr};

inline void sched_point(Site site) noexcept {
  if (auto *hook = sched_hook.load(std::memory_order_relaxed)) hook(site);
}

bool poison_from_environment() noexcept;

inline std::atomic<bool> poison_flag{poison_from_environment()};

/// Poisoning and shadow checks are enabled by KOTRIE_DEBUG_POISON=1 in the
/// environment, or programmatically before any structure is constructed.
inline bool poison_enabled() noexcept {
  return poison_flag.load(std::memory_order_relaxed);
}
inline void set_poison_enabled(bool on) noexcept {
  poison_flag.store(on, std::memory_order_relaxed);
}

struct Counters {
  std::atomic<std::uint64_t> poison_reads{0};
  std::atomic<std::uint64_t> double_bagging{0};
  std::atomic<std::uint64_t> early_drains{0};
  std::atomic<std::uint64_t> drained{0};
  std::atomic<std::uint64_t> dcount_underflow{0};
  std::atomic<std::uint64_t> shadow_violations{0};
  std::atomic<std::uint64_t> shadow_increments{0};
};

Counters &counters() noexcept;
void reset_counters() noexcept;

}  // namespace kotrie::debug

#endif  // KOTRIE_DEBUG_HPP
