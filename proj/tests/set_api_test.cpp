#include <doctest.h>

#include <random>
#include <set>

#include "patricia/audit.hpp"
#include "patricia/history.hpp"
#include "patricia/trie.hpp"

using namespace patricia;
using harness::dump_tree;
using harness::quiescent_audit;

namespace {

constexpr int kGeneral = static_cast<int>(core::ReplaceCase::kGeneral);
constexpr int kTargetIsVictim = static_cast<int>(core::ReplaceCase::kTargetIsVictim);
constexpr int kTargetIsParent = static_cast<int>(core::ReplaceCase::kTargetIsParent);
constexpr int kSameParent = static_cast<int>(core::ReplaceCase::kSameParent);
constexpr int kTargetIsGrandparent =
    static_cast<int>(core::ReplaceCase::kTargetIsGrandparent);

uint64_t dispatch_count(const Trie& t, int arm) {
  return t.stats().replace_dispatch[static_cast<std::size_t>(arm)].load();
}

}  // namespace

TEST_CASE("insert adds an absent key exactly once") {
  Trie t(4);
  const OpResult first = t.insert(0b0101);
  CHECK(first.ok);
  CHECK(first.retries >= 1);
  CHECK(t.contains(0b0101));
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  internal label=0 unflag\n"
        "    leaf label=0000 unflag\n"
        "    leaf label=0101 unflag\n"
        "  leaf label=1111 unflag\n");

  const OpResult second = t.insert(0b0101);
  CHECK_FALSE(second.ok);
  CHECK(second.retries >= 1);
}

TEST_CASE("sentinel keys are rejected with the reserved-key error") {
  Trie t(4);
  CHECK_THROWS_AS(t.insert(0b0000), ReservedKeyError);
  CHECK_THROWS_AS(t.insert(0b1111), ReservedKeyError);
  CHECK_THROWS_AS(t.erase(0b1111), ReservedKeyError);
  CHECK_THROWS_AS(t.contains(0), ReservedKeyError);
  CHECK_THROWS_AS(t.replace(0b0101, 0b1111), ReservedKeyError);
}

TEST_CASE("keys wider than the trie are rejected") {
  Trie t(4);
  CHECK_THROWS_AS(t.insert(0b10000), std::out_of_range);
  CHECK_THROWS_AS(t.contains(255), std::out_of_range);
}

TEST_CASE("invalid widths are rejected at construction") {
  CHECK_THROWS_AS(Trie(0), std::invalid_argument);
  CHECK_THROWS_AS(Trie(65), std::invalid_argument);
}

TEST_CASE("erase removes a present key and hoists the sibling") {
  Trie t(4);
  REQUIRE(t.insert(0b0101).ok);
  CHECK(t.erase(0b0101).ok);
  CHECK_FALSE(t.contains(0b0101));
  // The internal node is gone; its surviving child sits under the root.
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  leaf label=0000 unflag\n"
        "  leaf label=1111 unflag\n");
  CHECK_FALSE(t.erase(0b0101).ok);
  const auto audit = quiescent_audit(t);
  CHECK(audit.ok);
  CHECK(audit.keys.empty());
}

TEST_CASE("erase on a fresh trie returns false") {
  Trie t(4);
  CHECK_FALSE(t.erase(0b0101).ok);
}

TEST_CASE("replace sequential contract") {
  Trie t(4);
  SUBCASE("moves a present key to an absent one") {
    REQUIRE(t.insert(0b0101).ok);
    CHECK(t.replace(0b0101, 0b0110).ok);
    CHECK_FALSE(t.contains(0b0101));
    CHECK(t.contains(0b0110));
  }
  SUBCASE("fails when the old key is absent") {
    CHECK_FALSE(t.replace(0b0101, 0b0110).ok);
  }
  SUBCASE("fails when the new key is present") {
    REQUIRE(t.insert(0b0101).ok);
    REQUIRE(t.insert(0b0110).ok);
    CHECK_FALSE(t.replace(0b0101, 0b0110).ok);
    CHECK(t.contains(0b0101));
    CHECK(t.contains(0b0110));
  }
  SUBCASE("identical keys are a caller bug") {
    CHECK_THROWS_AS(t.replace(0b0101, 0b0101), SelfReplaceError);
  }
}

// The five replace dispatch arms, each driven by a trie shaped to trigger
// exactly that branch, with the post-state checked structurally.

TEST_CASE("replace dispatch: target leaf is the victim leaf") {
  Trie t(4);
  REQUIRE(t.insert(0b0101).ok);
  REQUIRE(t.replace(0b0101, 0b0110).ok);
  CHECK(dispatch_count(t, kTargetIsVictim) == 1);
  CHECK(dispatch_count(t, kGeneral) == 0);
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  internal label=0 unflag\n"
        "    leaf label=0000 unflag\n"
        "    leaf label=0110 unflag\n"
        "  leaf label=1111 unflag\n");
  const auto audit = quiescent_audit(t);
  CHECK(audit.ok);
  CHECK(audit.keys == std::set<uint64_t>{0b0110});
}

TEST_CASE("replace dispatch: insertion target is the victim's parent") {
  Trie t(4);
  REQUIRE(t.insert(0b0100).ok);
  REQUIRE(t.insert(0b0101).ok);
  // search(0110) stops at internal 010 == p_d, from parent 0 == gp_d.
  REQUIRE(t.replace(0b0101, 0b0110).ok);
  CHECK(dispatch_count(t, kTargetIsParent) == 1);
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  internal label=0 unflag\n"
        "    leaf label=0000 unflag\n"
        "    internal label=01 unflag\n"
        "      leaf label=0100 unflag\n"
        "      leaf label=0110 unflag\n"
        "  leaf label=1111 unflag\n");
  const auto audit = quiescent_audit(t);
  CHECK(audit.ok);
  CHECK(audit.keys == std::set<uint64_t>{0b0100, 0b0110});
}

TEST_CASE("replace dispatch: both searches share the parent") {
  Trie t(4);
  REQUIRE(t.insert(0b0100).ok);
  REQUIRE(t.insert(0b0111).ok);
  // search(0101) descends into internal 01 and stops on the 0100 leaf:
  // p_i == p_d with gp_d present.
  REQUIRE(t.replace(0b0111, 0b0101).ok);
  CHECK(dispatch_count(t, kSameParent) == 1);
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  internal label=0 unflag\n"
        "    leaf label=0000 unflag\n"
        "    internal label=010 unflag\n"
        "      leaf label=0100 unflag\n"
        "      leaf label=0101 unflag\n"
        "  leaf label=1111 unflag\n");
  const auto audit = quiescent_audit(t);
  CHECK(audit.ok);
  CHECK(audit.keys == std::set<uint64_t>{0b0100, 0b0101});
}

TEST_CASE("replace dispatch: insertion target is the victim's grandparent") {
  Trie t(4);
  REQUIRE(t.insert(0b0010).ok);
  REQUIRE(t.insert(0b0011).ok);
  // search(0100) diverges exactly at internal 00 == gp_d.
  REQUIRE(t.replace(0b0011, 0b0100).ok);
  CHECK(dispatch_count(t, kTargetIsGrandparent) == 1);
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  internal label=0 unflag\n"
        "    internal label=00 unflag\n"
        "      leaf label=0000 unflag\n"
        "      leaf label=0010 unflag\n"
        "    leaf label=0100 unflag\n"
        "  leaf label=1111 unflag\n");
  const auto audit = quiescent_audit(t);
  CHECK(audit.ok);
  CHECK(audit.keys == std::set<uint64_t>{0b0010, 0b0100});
}

TEST_CASE("replace dispatch: general case uses two child CAS steps") {
  Trie t(4);
  REQUIRE(t.insert(0b0100).ok);
  REQUIRE(t.insert(0b0101).ok);
  // vi = 0010 lands on the sentinel-copy leaf under node 0, disjoint from
  // vd's parent 010.
  REQUIRE(t.replace(0b0101, 0b0010).ok);
  CHECK(dispatch_count(t, kGeneral) == 1);
  CHECK(dump_tree(t, false) ==
        "internal label=<eps> unflag\n"
        "  internal label=0 unflag\n"
        "    internal label=00 unflag\n"
        "      leaf label=0000 unflag\n"
        "      leaf label=0010 unflag\n"
        "    leaf label=0100 unflag\n"
        "  leaf label=1111 unflag\n");
  const auto audit = quiescent_audit(t);
  CHECK(audit.ok);
  CHECK(audit.keys == std::set<uint64_t>{0b0010, 0b0100});
  CHECK(t.stats().child_cas_double_wins.load() == 0);
  CHECK(t.stats().flag_order_violations.load() == 0);
}

TEST_CASE("single-threaded sequential refinement against the oracle") {
  constexpr uint32_t kWidth = 8;
  Trie t(kWidth);
  harness::OracleSet oracle;
  std::mt19937_64 rng(20240817);
  std::uniform_int_distribution<uint64_t> key_dist(1, 254);
  std::uniform_int_distribution<int> op_dist(0, 99);

  for (int step = 0; step < 10000; ++step) {
    const int roll = op_dist(rng);
    const uint64_t a = key_dist(rng);
    if (roll < 30) {
      CHECK(t.insert(a).ok == oracle.insert(a));
    } else if (roll < 60) {
      CHECK(t.erase(a).ok == oracle.erase(a));
    } else if (roll < 80) {
      uint64_t b = key_dist(rng);
      while (b == a) b = key_dist(rng);
      CHECK(t.replace(a, b).ok == oracle.replace(a, b));
    } else {
      CHECK(t.contains(a) == oracle.contains(a));
    }
    if (step % 500 == 499) {
      const auto audit = quiescent_audit(t);
      REQUIRE(audit.ok);
      REQUIRE(audit.keys == oracle.contents());
    }
  }
  CHECK(t.stats().failed_update_child_cas.load() == 0);
  CHECK(t.stats().incomplete_success_child_cas.load() == 0);
  CHECK(t.stats().max_search_iterations.load() <= kWidth);

  // Leak audit: at quiescence every allocation is either reachable (one
  // node plus its info record) or has been reclaimed.
  t.domain().collect();
  const auto audit = quiescent_audit(t);
  REQUIRE(audit.ok);
  CHECK(t.domain().live() == static_cast<int64_t>(2 * audit.reachable_nodes));
}

TEST_CASE("reclamation on and off give identical results") {
  constexpr uint32_t kWidth = 8;
  Trie with(kWidth, true);
  Trie without(kWidth, false);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<uint64_t> key_dist(1, 60);
  std::uniform_int_distribution<int> op_dist(0, 3);

  for (int step = 0; step < 5000; ++step) {
    const int op = op_dist(rng);
    const uint64_t a = key_dist(rng);
    uint64_t b = key_dist(rng);
    while (b == a) b = key_dist(rng);
    switch (op) {
      case 0: CHECK(with.insert(a).ok == without.insert(a).ok); break;
      case 1: CHECK(with.erase(a).ok == without.erase(a).ok); break;
      case 2: CHECK(with.replace(a, b).ok == without.replace(a, b).ok); break;
      default: CHECK(with.contains(a) == without.contains(a)); break;
    }
  }
  CHECK(quiescent_audit(with).keys == quiescent_audit(without).keys);
  CHECK(without.domain().retired_pending() > 0);  // deferred, not reclaimed
}

TEST_CASE("single-threaded insert/erase loop keeps live objects bounded") {
  constexpr uint32_t kWidth = 16;
  constexpr uint64_t kRange = 100;
  Trie t(kWidth);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<uint64_t> key_dist(1, kRange - 1);
  for (int i = 0; i < 100000; ++i) {
    const uint64_t k = key_dist(rng);
    if (rng() & 1)
      t.insert(k);
    else
      t.erase(k);
  }
  t.domain().collect();
  const auto audit = quiescent_audit(t);
  REQUIRE(audit.ok);
  // Live allocations are the reachable graph plus nothing else.
  CHECK(t.domain().live() == static_cast<int64_t>(2 * audit.reachable_nodes));
  CHECK(t.domain().live() <= static_cast<int64_t>(8 * kRange + 64));
}
