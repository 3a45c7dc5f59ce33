#ifndef KOTRIE_SKIPLIST_HPP
#define KOTRIE_SKIPLIST_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "kotrie/common.hpp"
#include "kotrie/reclaim.hpp"

namespace kotrie {

struct SkipNode : Retirable {
  Key key = 0;
  std::atomic<std::uint64_t> succ{0};
  std::atomic<SkipNode *> backlink{nullptr};
  SkipNode *down = nullptr;
  SkipNode *tower_root = nullptr;
  // Root only: linked levels plus one while the inserter is building.
  std::atomic<int> tower_refs{0};
  std::atomic<SkipNode *> tower_top{nullptr};
};

/// Lock-free skip list in which each level is a list with mark, flag and
/// backlink per node.
class SkipList {
 public:
  static constexpr unsigned kDefaultHeight = 20;

  explicit SkipList(std::size_t processes = kDefaultMaxProcesses,
                    std::uint64_t seed = 1, unsigned height = kDefaultHeight);
  ~SkipList();

  SkipList(const SkipList &) = delete;
  SkipList &operator=(const SkipList &) = delete;

  ProcessId register_thread();

  bool search(ProcessId pid, Key x);
  bool insert(ProcessId pid, Key x);
  bool remove(ProcessId pid, Key x);
  Key predecessor(ProcessId pid, Key x);

  void drain(ProcessId pid) { reclaimer_.drain(pid); }
  EpochReclaimer &reclaimer() noexcept { return reclaimer_; }
  [[nodiscard]] unsigned height() const noexcept { return height_; }

  /// Quiescent-only inspection.
  std::size_t size_slow() const;
  /// Number of linked nodes per level, bottom first.
  std::vector<std::size_t> level_counts() const;
  /// True if no linked node above the bottom level has a marked root.
  bool towers_clean() const;

 private:
  enum class FlagStatus { kIn, kDeleted };

  struct alignas(kCacheLine) Local {
    std::mt19937_64 rng;
  };

  struct Pair {
    SkipNode *first;
    SkipNode *second;
  };

  Pair search_right(ProcessId pid, Key k, SkipNode *curr);
  Pair search_to_level(ProcessId pid, Key k, unsigned level);
  FlagStatus try_flag(ProcessId pid, SkipNode *&prev, SkipNode *target, bool &won);
  void help_flagged(ProcessId pid, SkipNode *prev, SkipNode *del);
  void try_mark(ProcessId pid, SkipNode *del);
  void help_marked(ProcessId pid, SkipNode *prev, SkipNode *del);
  bool delete_node(ProcessId pid, SkipNode *prev, SkipNode *del);
  void release_tower(ProcessId pid, SkipNode *root);
  /// Returns the node now linked at this level with key new_node->key, which
  /// is new_node itself on success.
  SkipNode *insert_node(ProcessId pid, SkipNode *new_node, SkipNode *&prev, SkipNode *next);
  unsigned draw_height(ProcessId pid);

  unsigned height_;
  std::size_t n_;
  EpochReclaimer reclaimer_;
  std::unique_ptr<SkipNode[]> heads_;
  SkipNode tail_;
  std::unique_ptr<Local[]> local_;
  std::atomic<std::size_t> registered_{0};
};

}  // namespace kotrie

#endif  // KOTRIE_SKIPLIST_HPP
