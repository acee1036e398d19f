/// \file lincheck.hpp
/// \brief Randomized concurrent workloads and the linearizability checker.
///
/// The checker searches for a total order of the history's operations that
/// extends real-time precedence and replays correctly against OracleSet.
/// States are memoized on (taken-set, oracle contents), so bounded histories
/// check in well under a second.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "patricia/history.hpp"
#include "patricia/trie.hpp"

namespace patricia::harness {

struct WorkloadSpec {
  uint32_t threads = 2;
  uint32_t ops_per_thread = 8;
  std::vector<uint64_t> keys;           // universe; must exclude sentinels
  std::array<int, 4> mix{25, 25, 25, 25};  // insert/delete/replace/find %
  uint64_t seed = 1;
};

/// Runs the randomized workload against one shared trie and records every
/// invoke/respond. Event content is deterministic given the seed; the
/// interleaving is whatever the scheduler produced.
History run_workload(Trie& trie, const WorkloadSpec& spec);

enum class Verdict { kLinearizable, kViolation, kInconclusive };

struct CheckResult {
  Verdict verdict = Verdict::kLinearizable;
  /// Operation indices (per the order grouped from the history) forming a
  /// witness linearization when the verdict is linearizable.
  std::vector<uint32_t> witness;
  /// Minimal violating prefix of the events when the verdict is violation.
  std::vector<HistoryEvent> violating_prefix;
  uint64_t states_explored = 0;
};

inline constexpr uint64_t kDefaultStateBudget = 4'000'000;

CheckResult check_linearizable(const History& h,
                               uint64_t state_budget = kDefaultStateBudget);

}  // namespace patricia::harness
