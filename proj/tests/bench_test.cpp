#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "kotrie/bench.hpp"

using namespace kotrie;
using namespace kotrie::bench;

namespace {

std::vector<std::string> read_lines(const std::string &path) {
  std::ifstream in{path};
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string temp_path(const std::string &name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Bench, PrefillTarget) {
  EXPECT_EQ(prefill_target(Mix{4, 1, 0, 0}, 8), 204u);
  EXPECT_EQ(prefill_target(Mix{1, 1, 1, 1}, 20), 524288u);
  EXPECT_EQ(prefill_target(Mix{1, 4, 2, 2}, 10), 204u);
}

TEST(Bench, ParseMix) {
  const Mix m = parse_mix("4:1:2:3");
  EXPECT_EQ(m.insert, 4u);
  EXPECT_EQ(m.remove, 1u);
  EXPECT_EQ(m.search, 2u);
  EXPECT_EQ(m.predecessor, 3u);
  EXPECT_EQ(m.total(), 10u);
  EXPECT_THROW(parse_mix("0:1:1:1"), std::invalid_argument);
  EXPECT_THROW(parse_mix("1:0:1:1"), std::invalid_argument);
  EXPECT_THROW(parse_mix("1:1:1"), std::invalid_argument);
  EXPECT_THROW(parse_mix("1:1:1:1:1"), std::invalid_argument);
  EXPECT_THROW(parse_mix("a:1:1:1"), std::invalid_argument);
  EXPECT_THROW(parse_mix("1:-1:1:1"), std::invalid_argument);
}

TEST(Bench, ParseNames) {
  EXPECT_EQ(parse_structure("kotrie"), Structure::kKoTrie);
  EXPECT_EQ(parse_structure("skiplist"), Structure::kSkipList);
  EXPECT_EQ(parse_structure("augtrie"), Structure::kAugTrie);
  EXPECT_THROW(parse_structure("btree"), std::invalid_argument);
  EXPECT_EQ(parse_pinning("compact"), Pinning::kCompact);
  EXPECT_EQ(parse_pinning("even"), Pinning::kEven);
  EXPECT_EQ(parse_pinning("none"), Pinning::kNone);
  EXPECT_THROW(parse_pinning("all"), std::invalid_argument);
  for (auto s : {Structure::kKoTrie, Structure::kSkipList, Structure::kAugTrie})
    EXPECT_EQ(parse_structure(to_string(s)), s);
}

TEST(Bench, OpStreamIsDeterministic) {
  const Mix mix{1, 1, 1, 1};
  OpStream a{42, 3, mix, 10}, b{42, 3, mix, 10}, c{42, 4, mix, 10};
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.next();
    const auto y = b.next();
    const auto z = c.next();
    ASSERT_EQ(x, y);
    ASSERT_GE(x.second, 0);
    ASSERT_LT(x.second, 1024);
    differs = differs || x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(Bench, OpStreamFollowsMix) {
  OpStream s{1, 0, Mix{1, 1, 0, 8}, 6};
  std::map<OpKind, int> count;
  for (int i = 0; i < 100000; ++i) ++count[s.next().first];
  EXPECT_EQ(count[OpKind::kSearch], 0);
  EXPECT_NEAR(count[OpKind::kPredecessor] / 100000.0, 0.8, 0.01);
  EXPECT_NEAR(count[OpKind::kInsert] / 100000.0, 0.1, 0.01);
}

TEST(Bench, CsvHeaderAndRow) {
  EXPECT_EQ(csv_header(), "structure,k,threads,seconds,I,R,S,P,pin,seed,trial,throughput");
  RunResult r;
  r.config.structure = Structure::kSkipList;
  r.config.k = 12;
  r.config.threads = 4;
  r.config.seconds = 2;
  r.config.mix = Mix{4, 1, 2, 2};
  r.config.pin = Pinning::kEven;
  r.config.seed = 9;
  r.trial = 3;
  r.throughput = 12345;
  EXPECT_EQ(csv_row(r), "skiplist,12,4,2,4,1,2,2,even,9,3,12345");
}

TEST(Bench, AppendCsvWritesHeaderOnce) {
  const std::string path = temp_path("kotrie_bench_test.csv");
  std::filesystem::remove(path);
  RunResult r;
  append_csv(path, {r});
  append_csv(path, {r, r});
  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], csv_header());
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_EQ(lines[i], csv_row(r));
  std::filesystem::remove(path);
}

TEST(Bench, AppendCsvReportsUnwritablePath) {
  EXPECT_THROW(append_csv("/nonexistent-dir/x.csv", {RunResult{}}), std::runtime_error);
}

TEST(Bench, RunTrialRejectsBadConfig) {
  ExperimentConfig c;
  c.threads = 0;
  EXPECT_THROW(run_trial(c, 0), std::invalid_argument);
  c.threads = 1;
  c.k = 30;
  EXPECT_THROW(run_trial(c, 0), std::invalid_argument);
  c.k = 8;
  c.seconds = 0;
  EXPECT_THROW(run_trial(c, 0), std::invalid_argument);
}

TEST(Bench, ShortTrialPerStructure) {
  for (auto s : {Structure::kKoTrie, Structure::kSkipList, Structure::kAugTrie}) {
    ExperimentConfig c;
    c.structure = s;
    c.k = 10;
    c.threads = 2;
    c.seconds = 0.2;
    c.mix = Mix{4, 1, 2, 2};
    const RunResult r = run_trial(c, 0);
    EXPECT_EQ(r.prefill_size, 819u);
    ASSERT_EQ(r.ops_per_thread.size(), 2u);
    std::uint64_t sum = 0;
    for (unsigned i = 0; i < 2; ++i) {
      EXPECT_GT(r.ops_per_thread[i], 0u);
      EXPECT_EQ(r.ops_per_thread[i], r.checks_per_thread[i] * kBatch);
      sum += r.ops_per_thread[i];
    }
    EXPECT_EQ(r.throughput, sum);
    EXPECT_TRUE(r.structure_ok) << to_string(s) << ": " << r.structure_message;
    EXPECT_LE(r.final_size, 1024u);
  }
}
