#ifndef KOTRIE_AUGTRIE_HPP
#define KOTRIE_AUGTRIE_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "kotrie/common.hpp"
#include "kotrie/reclaim.hpp"

namespace kotrie {

/// Immutable version of a trie node. Leaves use `bit` and `completed`;
/// internal versions use `left`, `right` and `sum`.
struct VersionNode : Retirable {
  VersionNode *left = nullptr;
  VersionNode *right = nullptr;
  std::int64_t sum = 0;
  bool leaf = false;
  std::atomic<bool> completed{false};
};

/// Wait-free binary trie whose internal nodes carry subtree sizes.
class AugmentedTrie {
 public:
  static constexpr unsigned kMaxK = 24;

  explicit AugmentedTrie(unsigned k, std::size_t processes = kDefaultMaxProcesses);
  ~AugmentedTrie();

  AugmentedTrie(const AugmentedTrie &) = delete;
  AugmentedTrie &operator=(const AugmentedTrie &) = delete;

  ProcessId register_thread();

  bool search(ProcessId pid, Key x);
  bool insert(ProcessId pid, Key x);
  bool remove(ProcessId pid, Key x);
  Key predecessor(ProcessId pid, Key x);
  std::int64_t size(ProcessId pid);

  void drain(ProcessId pid) { reclaimer_.drain(pid); }
  EpochReclaimer &reclaimer() noexcept { return reclaimer_; }
  [[nodiscard]] unsigned k() const noexcept { return k_; }
  [[nodiscard]] Key universe() const noexcept { return Key{1} << k_; }

  /// Quiescent-only: every current internal version satisfies
  /// sum = left.sum + right.sum and references its children's current
  /// versions; the root sum equals the number of 1 leaves.
  bool check_sums(std::string *why) const;
  std::size_t size_slow() const;

 private:
  bool update(ProcessId pid, Key x, bool bit);
  void propagate(ProcessId pid, Key x);
  bool refresh(ProcessId pid, std::size_t index);

  unsigned k_;
  std::size_t n_;
  EpochReclaimer reclaimer_;
  std::unique_ptr<std::atomic<VersionNode *>[]> main_;
  std::atomic<std::size_t> registered_{0};
};

}  // namespace kotrie

#endif  // KOTRIE_AUGTRIE_HPP
