#include "kotrie/bench.hpp"

#include <pthread.h>
#include <sched.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kotrie/augtrie.hpp"
#include "kotrie/skiplist.hpp"
#include "kotrie/trie.hpp"

namespace kotrie::bench {

Structure parse_structure(const std::string &s) {
  if (s == "kotrie") return Structure::kKoTrie;
  if (s == "skiplist") return Structure::kSkipList;
  if (s == "augtrie") return Structure::kAugTrie;
  throw std::invalid_argument("unknown structure: " + s);
}

Pinning parse_pinning(const std::string &s) {
  if (s == "compact") return Pinning::kCompact;
  if (s == "even") return Pinning::kEven;
  if (s == "none") return Pinning::kNone;
  throw std::invalid_argument("unknown pinning: " + s);
}

std::string to_string(Structure s) {
  switch (s) {
    case Structure::kKoTrie: return "kotrie";
    case Structure::kSkipList: return "skiplist";
    case Structure::kAugTrie: return "augtrie";
  }
  return "?";
}

std::string to_string(Pinning p) {
  switch (p) {
    case Pinning::kCompact: return "compact";
    case Pinning::kEven: return "even";
    case Pinning::kNone: return "none";
  }
  return "?";
}

Mix parse_mix(const std::string &s) {
  unsigned v[4];
  std::istringstream in{s};
  for (int i = 0; i < 4; ++i) {
    long long x = -1;
    if (!(in >> x) || x < 0) throw std::invalid_argument("bad mix: " + s);
    v[i] = static_cast<unsigned>(x);
    if (i < 3 && in.get() != ':') throw std::invalid_argument("bad mix: " + s);
  }
  if (in.peek() != EOF) throw std::invalid_argument("bad mix: " + s);
  Mix m{v[0], v[1], v[2], v[3]};
  if (m.insert == 0 || m.remove == 0)
    throw std::invalid_argument("mix needs nonzero insert and remove weights");
  return m;
}

std::uint64_t prefill_target(const Mix &mix, unsigned k) {
  return (std::uint64_t{mix.insert} << k) / (mix.insert + mix.remove);
}

OpStream::OpStream(std::uint64_t seed, ProcessId pid, const Mix &mix, unsigned k)
    : mix_{mix}, mask_{(std::uint64_t{1} << k) - 1} {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(pid), 0x6f70u};
  rng_.seed(seq);
}

std::pair<OpKind, Key> OpStream::next() {
  const std::uint64_t r = rng_();
  const Key key = static_cast<Key>(rng_() & mask_);
  std::uint64_t pick = r % mix_.total();
  if (pick < mix_.insert) return {OpKind::kInsert, key};
  pick -= mix_.insert;
  if (pick < mix_.remove) return {OpKind::kRemove, key};
  pick -= mix_.remove;
  if (pick < mix_.search) return {OpKind::kSearch, key};
  return {OpKind::kPredecessor, key};
}

namespace {

void pin_thread(std::thread &t, Pinning pin, unsigned worker) {
  if (pin == Pinning::kNone) return;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned cpu = pin == Pinning::kCompact ? worker : 2 * worker;
  if (cpu >= hw) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "warning: requested CPU " << cpu << " but only " << hw
                << " available; wrapping\n";
    cpu %= hw;
  }
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  if (pthread_setaffinity_np(t.native_handle(), sizeof(set), &set) != 0) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) std::cerr << "warning: thread pinning unavailable\n";
  }
}

std::unique_ptr<LockFreeTrie> make(const ExperimentConfig &c, LockFreeTrie *) {
  return std::make_unique<LockFreeTrie>(c.k, c.threads + 1);
}
std::unique_ptr<SkipList> make(const ExperimentConfig &c, SkipList *) {
  return std::make_unique<SkipList>(c.threads + 1, c.seed);
}
std::unique_ptr<AugmentedTrie> make(const ExperimentConfig &c, AugmentedTrie *) {
  return std::make_unique<AugmentedTrie>(c.k, c.threads + 1);
}

bool quiescent_check(LockFreeTrie &s, std::string *why) { return s.check_quiescent(why); }
bool quiescent_check(AugmentedTrie &s, std::string *why) { return s.check_sums(why); }
bool quiescent_check(SkipList &s, std::string *why) {
  if (s.towers_clean()) return true;
  *why = "tower with deleted root still linked";
  return false;
}

template <typename S>
RunResult run_impl(const ExperimentConfig &config, unsigned trial) {
  RunResult result;
  result.config = config;
  result.trial = trial;
  auto set = make(config, static_cast<S *>(nullptr));

  const ProcessId coordinator = set->register_thread();
  const std::uint64_t target = prefill_target(config.mix, config.k);
  {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(trial), 0x7072u};
    std::mt19937_64 rng{seq};
    const std::uint64_t mask = (std::uint64_t{1} << config.k) - 1;
    std::vector<bool> chosen(mask + 1, false);
    std::vector<Key> keys;
    keys.reserve(target);
    while (keys.size() < target) {
      const std::uint64_t x = rng() & mask;
      if (!chosen[x]) {
        chosen[x] = true;
        keys.push_back(static_cast<Key>(x));
      }
    }
    for (Key x : keys) set->insert(coordinator, x);
    result.prefill_size = keys.size();
  }

  const unsigned n = config.threads;
  std::atomic<unsigned> ready{0};
  std::atomic<unsigned> finished{0};
  std::atomic<bool> done{false};
  result.ops_per_thread.assign(n, 0);
  result.checks_per_thread.assign(n, 0);
  const auto duration = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(config.seconds));

  auto worker = [&](unsigned index) {
    const ProcessId pid = set->register_thread();
    OpStream stream{config.seed + trial, pid, config.mix, config.k};
    ready.fetch_add(1);
    while (ready.load() < n) std::this_thread::yield();
    const auto end = std::chrono::steady_clock::now() + duration;
    std::uint64_t ops = 0;
    std::uint64_t checks = 0;
    std::uint64_t sink = 0;
    for (;;) {
      for (unsigned i = 0; i < kBatch; ++i) {
        const auto [op, key] = stream.next();
        switch (op) {
          case OpKind::kInsert: sink += set->insert(pid, key); break;
          case OpKind::kRemove: sink += set->remove(pid, key); break;
          case OpKind::kSearch: sink += set->search(pid, key); break;
          case OpKind::kPredecessor:
            sink += static_cast<std::uint64_t>(set->predecessor(pid, key));
            break;
        }
      }
      ops += kBatch;
      ++checks;
      if (done.load(std::memory_order_relaxed) || std::chrono::steady_clock::now() >= end) {
        done.store(true);
        break;
      }
    }
    result.ops_per_thread[index] = ops;
    result.checks_per_thread[index] = checks;
    volatile std::uint64_t keep = sink;
    (void)keep;
    finished.fetch_add(1);
    while (finished.load() < n) std::this_thread::yield();
    set->drain(pid);
  };

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  threads.reserve(n);
  for (unsigned i = 0; i < n; ++i) {
    threads.emplace_back(worker, i);
    pin_thread(threads.back(), config.pin, i);
  }
  std::this_thread::sleep_for(duration + std::chrono::milliseconds(200));
  for (auto &t : threads) t.join();
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  for (std::uint64_t ops : result.ops_per_thread) result.throughput += ops;
  set->drain(coordinator);
  result.final_size = set->size_slow();
  result.structure_ok = quiescent_check(*set, &result.structure_message);
  return result;
}

}  // namespace

RunResult run_trial(const ExperimentConfig &config, unsigned trial) {
  if (config.threads == 0) throw std::invalid_argument("need at least one worker");
  if (config.k < 1 || config.k > 24) throw std::invalid_argument("k must be in 1..24");
  if (config.seconds <= 0) throw std::invalid_argument("duration must be positive");
  switch (config.structure) {
    case Structure::kKoTrie: return run_impl<LockFreeTrie>(config, trial);
    case Structure::kSkipList: return run_impl<SkipList>(config, trial);
    case Structure::kAugTrie: return run_impl<AugmentedTrie>(config, trial);
  }
  throw std::invalid_argument("unknown structure");
}

std::string csv_header() { return "structure,k,threads,seconds,I,R,S,P,pin,seed,trial,throughput"; }

std::string csv_row(const RunResult &r) {
  const ExperimentConfig &c = r.config;
  std::ostringstream out;
  out << to_string(c.structure) << ',' << c.k << ',' << c.threads << ',' << c.seconds << ','
      << c.mix.insert << ',' << c.mix.remove << ',' << c.mix.search << ','
      << c.mix.predecessor << ',' << to_string(c.pin) << ',' << c.seed << ',' << r.trial << ','
      << r.throughput;
  return out.str();
}

void append_csv(const std::string &path, const std::vector<RunResult> &results) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out{path, std::ios::app};
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (fresh) out << csv_header() << '\n';
  for (const RunResult &r : results) out << csv_row(r) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace kotrie::bench
