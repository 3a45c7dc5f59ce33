#ifndef KOTRIE_BENCH_HPP
#define KOTRIE_BENCH_HPP

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kotrie/common.hpp"

namespace kotrie::bench {

enum class Structure { kKoTrie, kSkipList, kAugTrie };
enum class Pinning { kCompact, kEven, kNone };
enum class OpKind : std::uint8_t { kInsert, kRemove, kSearch, kPredecessor };

struct Mix {
  unsigned insert = 1;
  unsigned remove = 1;
  unsigned search = 1;
  unsigned predecessor = 1;

  [[nodiscard]] unsigned total() const noexcept {
    return insert + remove + search + predecessor;
  }
};

struct ExperimentConfig {
  Structure structure = Structure::kKoTrie;
  unsigned k = 20;
  unsigned threads = 1;
  double seconds = 5.0;
  Mix mix;
  Pinning pin = Pinning::kNone;
  std::uint64_t seed = 1;
  unsigned trials = 1;
};

struct RunResult {
  ExperimentConfig config;
  unsigned trial = 0;
  std::vector<std::uint64_t> ops_per_thread;
  /// Number of clock/done checks made by each worker.
  std::vector<std::uint64_t> checks_per_thread;
  std::uint64_t throughput = 0;
  double wall_seconds = 0;
  std::size_t prefill_size = 0;
  std::size_t final_size = 0;
  /// Result of the structure's own quiescent consistency check.
  bool structure_ok = true;
  std::string structure_message;
};

inline constexpr unsigned kBatch = 50;

Structure parse_structure(const std::string &s);
Pinning parse_pinning(const std::string &s);
/// Parses "I:R:S:P". Throws std::invalid_argument unless I > 0 and R > 0.
Mix parse_mix(const std::string &s);
std::string to_string(Structure s);
std::string to_string(Pinning p);

/// Number of keys present before timing starts: floor(I / (I+R) * 2^k).
std::uint64_t prefill_target(const Mix &mix, unsigned k);

/// Deterministic per-worker operation sequence.
class OpStream {
 public:
  OpStream(std::uint64_t seed, ProcessId pid, const Mix &mix, unsigned k);
  std::pair<OpKind, Key> next();

 private:
  std::mt19937_64 rng_;
  Mix mix_;
  std::uint64_t mask_;
};

RunResult run_trial(const ExperimentConfig &config, unsigned trial);

std::string csv_header();
std::string csv_row(const RunResult &r);
/// Appends rows, writing the header first if the file does not exist or is
/// empty. Throws std::runtime_error if the file cannot be written.
void append_csv(const std::string &path, const std::vector<RunResult> &results);

}  // namespace kotrie::bench

#endif  // KOTRIE_BENCH_HPP
