#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include "support/chaos.hpp"
#include "support/list_node.hpp"
#include "support/park.hpp"

using namespace kotrie;
using namespace kotrie::testing;

namespace {

using Fixture = ListFixture<AscendingList>;

std::vector<Key> keys_of(const std::vector<ListNode *> &nodes) {
  std::vector<Key> out;
  for (auto *n : nodes) out.push_back(n->key);
  return out;
}

}  // namespace

TEST(AnnouncementList, EmptyHasNoFirst) {
  Fixture f{1};
  EXPECT_EQ(f.list.first(), nullptr);
  EXPECT_EQ(f.list.successor(&f.head), &f.tail);
}

TEST(AnnouncementList, InsertIntoEmpty) {
  Fixture f{1};
  ListNode n{5};
  f.list.insert(0, &n);
  EXPECT_EQ(f.list.first(), &n);
  EXPECT_EQ(f.list.read_next(&n), nullptr);
}

TEST(AnnouncementList, EqualKeysKeepInsertionOrder) {
  Fixture f{1};
  ListNode a{3, 0}, b{1, 1}, c{4, 2}, d{1, 3}, e{5, 4};
  for (auto *n : {&a, &b, &c, &d, &e}) f.list.insert(0, n);
  auto got = snapshot(f.list);
  ASSERT_EQ(got.size(), 5u);
  EXPECT_EQ(keys_of(got), (std::vector<Key>{1, 1, 3, 4, 5}));
  EXPECT_EQ(got[0], &b);
  EXPECT_EQ(got[1], &d);
}

TEST(AnnouncementList, RemoveOnlyNode) {
  Fixture f{1};
  ListNode a{2};
  f.list.insert(0, &a);
  f.list.remove(&a);
  EXPECT_EQ(f.list.first(), nullptr);
  EXPECT_TRUE(AscendingList::is_marked(&a));
}

TEST(AnnouncementList, RemoveAbsentIsNoop) {
  Fixture f{1};
  ListNode a{2}, b{7}, ghost{4};
  f.list.insert(0, &a);
  f.list.insert(0, &b);
  f.list.remove(&ghost);
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{2, 7}));
  EXPECT_FALSE(AscendingList::is_marked(&ghost));
}

TEST(AnnouncementList, RemovedNodeIsNeverReinserted) {
  Fixture f{1};
  ListNode a{2};
  f.list.insert(0, &a);
  f.list.remove(&a);
  f.list.insert(0, &a);
  EXPECT_EQ(f.list.first(), nullptr);
  EXPECT_EQ(f.list.links(), 1u);
}

TEST(AnnouncementList, SecondInsertOfPresentNodeIsNoop) {
  Fixture f{2};
  ListNode a{2}, b{3};
  f.list.insert(0, &a);
  f.list.insert(0, &b);
  f.list.insert(1, &a);
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{2, 3}));
  EXPECT_EQ(f.list.links(), 2u);
}

TEST(AnnouncementList, ReadNextOfRemovedNodeGivesSuccessorAtRemoval) {
  Fixture f{1};
  ListNode a{1}, b{2}, c{3};
  for (auto *n : {&a, &b, &c}) f.list.insert(0, n);
  f.list.remove(&b);
  EXPECT_EQ(f.list.read_next(&b), &c);
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 3}));
}

TEST(AnnouncementList, DescendingInstanceOnSameNodes) {
  ListFixture<AscendingList> up{1};
  ListFixture<DescendingList> down{1, true};
  ListNode a{9}, b{5}, c{2};
  for (auto *n : {&b, &c, &a}) {
    up.list.insert(0, n);
    down.list.insert(0, n);
  }
  EXPECT_EQ(keys_of(snapshot(up.list)), (std::vector<Key>{2, 5, 9}));
  EXPECT_EQ(keys_of(snapshot(down.list)), (std::vector<Key>{9, 5, 2}));
  down.list.remove(&b);
  EXPECT_EQ(keys_of(snapshot(up.list)), (std::vector<Key>{2, 5, 9}));
  EXPECT_EQ(keys_of(snapshot(down.list)), (std::vector<Key>{9, 2}));
}

TEST(AnnouncementList, DuplicateInsertersLinkOnce) {
  ChaosScope chaos{2};
  for (unsigned racers : {2u, 8u}) {
    for (int trial = 0; trial < 100; ++trial) {
      Fixture f{racers};
      ListNode lo{1}, hi{9}, u{5};
      f.list.insert(0, &lo);
      f.list.insert(0, &hi);
      std::vector<std::thread> workers;
      for (unsigned t = 0; t < racers; ++t)
        workers.emplace_back([&, t] { f.list.insert(static_cast<ProcessId>(t), &u); });
      for (auto &w : workers) w.join();
      ASSERT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 5, 9}));
      ASSERT_EQ(f.list.links(), 3u);
    }
  }
}

TEST(AnnouncementList, ConcurrentInsertsThenRemovesMatchSequentialResult) {
  ChaosScope chaos{4};
  constexpr unsigned kThreads = 8;
  constexpr int kPerThread = 150;
  Fixture f{kThreads};
  std::vector<std::unique_ptr<ListNode>> nodes;
  std::mt19937_64 rng{5};
  for (unsigned i = 0; i < kThreads * kPerThread; ++i)
    nodes.push_back(std::make_unique<ListNode>(static_cast<Key>(rng() % 64), static_cast<int>(i)));

  auto run = [&](auto body) {
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < kThreads; ++t) workers.emplace_back(body, t);
    for (auto &w : workers) w.join();
  };
  run([&](unsigned t) {
    for (int i = 0; i < kPerThread; ++i) f.list.insert(t, nodes[t * kPerThread + i].get());
  });
  auto got = snapshot(f.list);
  ASSERT_EQ(got.size(), nodes.size());
  EXPECT_TRUE(std::is_sorted(got.begin(), got.end(),
                             [](auto *a, auto *b) { return a->key < b->key; }));
  // Nodes from one thread with equal keys keep that thread's order.
  for (std::size_t i = 0; i + 1 < got.size(); ++i) {
    if (got[i]->key == got[i + 1]->key && got[i]->tag / kPerThread == got[i + 1]->tag / kPerThread)
      EXPECT_LT(got[i]->tag, got[i + 1]->tag);
  }

  // Remove the odd-tagged nodes, each thread taking a slice other than its own.
  run([&](unsigned t) {
    const unsigned src = (t + 3) % kThreads;
    for (int i = 0; i < kPerThread; ++i) {
      ListNode *n = nodes[src * kPerThread + i].get();
      if (n->tag % 2 == 1) f.list.remove(n);
    }
  });
  got = snapshot(f.list);
  std::vector<Key> expect;
  for (auto &n : nodes)
    if (n->tag % 2 == 0) expect.push_back(n->key);
  std::sort(expect.begin(), expect.end());
  EXPECT_EQ(keys_of(got), expect);
  for (auto &n : nodes) EXPECT_EQ(AscendingList::is_marked(n.get()), n->tag % 2 == 1);
}

TEST(AnnouncementList, ConcurrentRemoversOfOneNode) {
  ChaosScope chaos{2};
  for (int trial = 0; trial < 100; ++trial) {
    Fixture f{3};
    ListNode a{1}, b{2}, c{3};
    for (auto *n : {&a, &b, &c}) f.list.insert(0, n);
    std::vector<std::thread> workers;
    for (int t = 0; t < 3; ++t) workers.emplace_back([&] { f.list.remove(&b); });
    for (auto &w : workers) w.join();
    ASSERT_TRUE(AscendingList::is_marked(&b));
    ASSERT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 3}));
  }
}

TEST(AnnouncementList, PendingDescriptorIsTransparentToReaders) {
  Fixture f{2};
  ListNode a{1}, b{2}, c{3};
  f.list.insert(0, &a);
  f.list.insert(0, &c);
  Parker park{debug::Site::kListHelpInsertNode};
  std::thread inserter([&] {
    Parker::arm_this_thread();
    f.list.insert(1, &b);
  });
  ASSERT_TRUE(park.wait_parked());
  EXPECT_EQ(link_word::state(a.next.load()), LinkState::kInsFlag);
  EXPECT_EQ(f.list.read_next(&a), &c);
  park.release();
  inserter.join();
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 2, 3}));
  EXPECT_EQ(f.list.links(), 3u);
}

TEST(AnnouncementList, RemoverCompletesPendingInsertionFirst) {
  Fixture f{2};
  ListNode a{1}, b{2}, c{3};
  f.list.insert(0, &a);
  f.list.insert(0, &c);
  Parker park{debug::Site::kListHelpInsertNode};
  std::thread inserter([&] {
    Parker::arm_this_thread();
    f.list.insert(1, &b);
  });
  ASSERT_TRUE(park.wait_parked());
  f.list.remove(&a);
  EXPECT_TRUE(AscendingList::is_marked(&a));
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{2, 3}));
  park.release();
  inserter.join();
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{2, 3}));
  EXPECT_EQ(f.list.links(), 3u);
}

TEST(AnnouncementList, StaleHelperDoesNotReinsert) {
  Fixture f{2};
  ListNode a{1}, b{2}, c{3};
  f.list.insert(0, &a);
  f.list.insert(0, &c);
  Parker park{debug::Site::kListHelpInsertNode};
  std::thread inserter([&] {
    Parker::arm_this_thread();
    f.list.insert(1, &b);
  });
  ASSERT_TRUE(park.wait_parked());
  f.list.insert(0, &b);  // helps the parked placement through
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 2, 3}));
  f.list.remove(&b);
  park.release();
  inserter.join();
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 3}));
  f.list.insert(0, &b);
  EXPECT_EQ(keys_of(snapshot(f.list)), (std::vector<Key>{1, 3}));
  EXPECT_EQ(f.list.links(), 3u);
}

class ListWatchdog : public ::testing::TestWithParam<debug::Site> {};

TEST_P(ListWatchdog, OthersFinishWhileOneThreadIsSuspended) {
  constexpr unsigned kWorkers = 3;
  Fixture f{kWorkers + 1};
  std::vector<std::unique_ptr<ListNode>> nodes;
  for (unsigned i = 0; i < (kWorkers + 1) * 64; ++i)
    nodes.push_back(std::make_unique<ListNode>(static_cast<Key>(i % 16)));

  Parker park{GetParam()};
  std::atomic<bool> others_done{false};
  std::thread victim([&] {
    Parker::arm_this_thread();
    std::mt19937_64 rng{1};
    for (unsigned i = 0; !others_done.load() && i < 64; ++i) {
      ListNode *n = nodes[kWorkers * 64 + i].get();
      f.list.insert(kWorkers, n);
      snapshot(f.list);
      f.list.remove(n);
    }
  });
  std::atomic<unsigned> finished{0};
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < kWorkers; ++t) {
    workers.emplace_back([&, t] {
      for (unsigned i = 0; i < 64; ++i) {
        ListNode *n = nodes[t * 64 + i].get();
        f.list.insert(t, n);
        snapshot(f.list);
        if (i % 2 == 0) f.list.remove(n);
      }
      finished.fetch_add(1);
    });
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds{30};
  while (finished.load() < kWorkers && std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds{1});
  const bool progressed = finished.load() == kWorkers;
  others_done.store(true);
  park.release();
  for (auto &w : workers) w.join();
  victim.join();
  EXPECT_TRUE(progressed);
  auto got = snapshot(f.list);
  EXPECT_TRUE(std::is_sorted(got.begin(), got.end(),
                             [](auto *a, auto *b) { return a->key < b->key; }));
  for (auto *n : got) EXPECT_FALSE(AscendingList::is_marked(n));
}

INSTANTIATE_TEST_SUITE_P(
    EverySite, ListWatchdog,
    ::testing::Values(debug::Site::kListHelpMarked, debug::Site::kListHelpInsertNode,
                      debug::Site::kListHelpInsertPrev, debug::Site::kListMark,
                      debug::Site::kListFlagInsert, debug::Site::kListFlagDelete,
                      debug::Site::kListBacklink, debug::Site::kListReadNext),
    [](const auto &info) { return "Site" + std::to_string(static_cast<int>(info.param)); });
