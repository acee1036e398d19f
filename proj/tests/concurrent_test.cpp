#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>
#include <vector>

#include "patricia/audit.hpp"
#include "patricia/trie.hpp"

using namespace patricia;
using harness::quiescent_audit;
using harness::SnapshotTracker;

namespace {

void hammer(Trie& t, uint64_t seed, int ops, uint64_t key_range, int replace_pct) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint64_t> key_dist(1, key_range - 1);
  std::uniform_int_distribution<int> op_dist(0, 99);
  for (int i = 0; i < ops; ++i) {
    const uint64_t a = key_dist(rng);
    const int roll = op_dist(rng);
    if (roll < 30) {
      t.insert(a);
    } else if (roll < 60) {
      t.erase(a);
    } else if (roll < 60 + replace_pct) {
      uint64_t b = key_dist(rng);
      while (b == a) b = key_dist(rng);
      t.replace(a, b);
    } else {
      t.contains(a);
    }
  }
}

}  // namespace

TEST_CASE("concurrent mixed stress with quiescent audits between batches") {
  constexpr uint32_t kWidth = 10;
  constexpr uint64_t kRange = 200;
  constexpr int kThreads = 4;
  Trie t(kWidth);
  SnapshotTracker tracker;

  for (int batch = 0; batch < 10; ++batch) {
    std::vector<std::thread> workers;
    for (int w = 0; w < kThreads; ++w)
      workers.emplace_back(hammer, std::ref(t),
                           uint64_t(batch * 100 + w + 1), 2000, kRange, 25);
    for (auto& w : workers) w.join();

    t.domain().collect();
    const auto report = quiescent_audit(t);
    REQUIRE(report.ok);
    CHECK(tracker.observe(report.reachable_ids).empty());
  }

  const auto& stats = t.stats();
  CHECK(stats.child_cas_double_wins.load() == 0);
  CHECK(stats.flag_order_violations.load() == 0);
  CHECK(stats.failed_update_child_cas.load() == 0);
  CHECK(stats.incomplete_success_child_cas.load() == 0);
  CHECK(stats.max_search_iterations.load() <= kWidth);

  // Quiescent leak audit: everything unreachable has been reclaimed.
  t.domain().collect();
  const auto report = quiescent_audit(t);
  REQUIRE(report.ok);
  CHECK(t.domain().live() == static_cast<int64_t>(2 * report.reachable_nodes));
  CHECK(t.domain().retired_pending() <= 64 * kThreads);
}

TEST_CASE("high contention over four keys exercises helping") {
  Trie t(8);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::thread> workers;
    for (int w = 0; w < 3; ++w)
      workers.emplace_back(hammer, std::ref(t),
                           uint64_t(round * 17 + w + 1), 1500, 5, 40);
    for (auto& w : workers) w.join();
    const auto report = quiescent_audit(t);
    REQUIRE(report.ok);
  }
  CHECK(t.stats().child_cas_double_wins.load() == 0);
  CHECK(t.stats().flag_order_violations.load() == 0);
  CHECK(t.stats().help_invocations.load() > 0);
}

TEST_CASE("short-lived threads release their reclamation slots") {
  Trie t(8);
  for (int i = 0; i < 300; ++i) {
    std::thread worker([&t, i] {
      t.insert(uint64_t(1 + (i % 100)));
      t.erase(uint64_t(1 + ((i + 50) % 100)));
    });
    worker.join();
  }
  const auto report = quiescent_audit(t);
  CHECK(report.ok);
}

TEST_CASE("a competing collector thread does not disturb operations") {
  Trie t(10);
  std::atomic<bool> stop{false};
  std::thread collector([&] {
    while (!stop.load()) t.domain().collect();
  });
  std::vector<std::thread> workers;
  for (int w = 0; w < 3; ++w)
    workers.emplace_back(hammer, std::ref(t), uint64_t(w + 1), 20000, 300, 20);
  for (auto& w : workers) w.join();
  stop.store(true);
  collector.join();

  t.domain().collect();
  const auto report = quiescent_audit(t);
  REQUIRE(report.ok);
  CHECK(t.domain().live() == static_cast<int64_t>(2 * report.reachable_nodes));
  CHECK(t.stats().child_cas_double_wins.load() == 0);
  CHECK(t.stats().flag_order_violations.load() == 0);
}

TEST_CASE("full-width keys work at the 64-bit default") {
  Trie t;  // default width 64
  const uint64_t lo = 1;
  const uint64_t hi = ~uint64_t{0} - 1;  // one under the high sentinel
  const uint64_t mid = 0x123456789abcdef0ULL;
  CHECK(t.insert(lo).ok);
  CHECK(t.insert(hi).ok);
  CHECK(t.insert(mid).ok);
  CHECK(t.contains(lo));
  CHECK(t.contains(hi));
  CHECK(t.replace(mid, mid + 1).ok);
  CHECK_FALSE(t.contains(mid));
  CHECK(t.contains(mid + 1));
  CHECK(t.erase(lo).ok);
  CHECK_THROWS_AS(t.insert(~uint64_t{0}), ReservedKeyError);
  const auto report = quiescent_audit(t);
  CHECK(report.ok);
  CHECK(report.keys == std::set<uint64_t>{hi, mid + 1});
  CHECK(t.stats().max_search_iterations.load() <= 64);
}

TEST_CASE("the minimum usable width holds two keys") {
  Trie t(2);  // keys 1 and 2; 0 and 3 are sentinels
  CHECK(t.insert(1).ok);
  CHECK(t.insert(2).ok);
  CHECK_FALSE(t.insert(1).ok);
  CHECK(t.erase(2).ok);
  CHECK(t.replace(1, 2).ok);
  CHECK_FALSE(t.contains(1));
  CHECK(t.contains(2));
  CHECK(quiescent_audit(t).ok);
}

TEST_CASE("two tries do not interfere through reclamation") {
  Trie a(8);
  Trie b(8);
  std::thread ta([&] { hammer(a, 1, 5000, 100, 20); });
  std::thread tb([&] { hammer(b, 2, 5000, 100, 20); });
  ta.join();
  tb.join();
  CHECK(quiescent_audit(a).ok);
  CHECK(quiescent_audit(b).ok);
}
