#ifndef KOTRIE_TESTS_CHAOS_HPP
#define KOTRIE_TESTS_CHAOS_HPP

#include <atomic>
#include <chrono>
#include <cstdint>
#include <random>
#include <thread>

#include "kotrie/debug.hpp"

namespace kotrie::testing {

/// Yields at protocol steps with probability 1/period so that threads
/// interleave inside operations even on a single core.
class ChaosScope {
 public:
  explicit ChaosScope(std::uint32_t period = 4) {
    period_.store(period);
    debug::sched_hook.store(&hook);
  }
  ~ChaosScope() { debug::sched_hook.store(nullptr); }
  ChaosScope(const ChaosScope &) = delete;
  ChaosScope &operator=(const ChaosScope &) = delete;

 private:
  static void hook(debug::Site) {
    thread_local std::minstd_rand rng{static_cast<std::uint32_t>(
        std::hash<std::thread::id>{}(std::this_thread::get_id()))};
    if (rng() % period_.load(std::memory_order_relaxed) == 0) std::this_thread::yield();
  }
  static inline std::atomic<std::uint32_t> period_{4};
};

/// Sleeps briefly at one chosen site, rotating through sites on each
/// invocation, so that every protocol step gets a turn at being stalled.
class StagedPauseScope {
 public:
  explicit StagedPauseScope(std::chrono::microseconds pause = std::chrono::microseconds{50}) {
    pause_us_.store(static_cast<std::uint32_t>(pause.count()));
    debug::sched_hook.store(&hook);
  }
  ~StagedPauseScope() { debug::sched_hook.store(nullptr); }
  StagedPauseScope(const StagedPauseScope &) = delete;
  StagedPauseScope &operator=(const StagedPauseScope &) = delete;

  static std::uint64_t pauses() { return pauses_.load(); }

 private:
  static void hook(debug::Site site) {
    thread_local int turn = 0;
    thread_local std::uint32_t tick = 0;
    if (static_cast<int>(site) == turn) {
      pauses_.fetch_add(1, std::memory_order_relaxed);
      std::this_thread::sleep_for(std::chrono::microseconds{pause_us_.load()});
    } else {
      std::this_thread::yield();
    }
    if (++tick % 3 == 0) turn = (turn + 1) % debug::kSiteCount;
  }
  static inline std::atomic<std::uint32_t> pause_us_{50};
  static inline std::atomic<std::uint64_t> pauses_{0};
};

}  // namespace kotrie::testing

#endif  // KOTRIE_TESTS_CHAOS_HPP
