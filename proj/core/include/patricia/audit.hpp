/// \file audit.hpp
/// \brief Quiescent whole-structure invariant validation.
///
/// Audits must run only while no operation is in flight: mid-operation
/// states legitimately contain removed-but-referenced nodes.
///
/// Checked per audit:
///   - prefix discipline: label of child i extends parent's label by bit i
///   - reachable labels pairwise distinct; every non-root node has exactly
///     one reachable parent slot; internal children non-null
///   - sentinel leaves 0^w and 1^w reachable and not logically removed
/// Across audits of one run, SnapshotTracker checks that a node identity
/// never re-enters the reachable set after leaving it.

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "patricia/trie.hpp"

namespace patricia::harness {

struct AuditReport {
  bool ok = true;
  std::vector<std::string> violations;
  std::vector<uint64_t> reachable_ids;  // creation ids, sorted
  std::size_t reachable_nodes = 0;
  std::set<uint64_t> keys;  // non-sentinel keys logically in the trie
  std::string dump;         // filled in when a violation is found
};

AuditReport quiescent_audit(const Trie& trie);

/// Indented tree text: one line per node with identity, label and flag
/// state. `with_ids` = false yields a shape-only dump for golden tests.
std::string dump_tree(const Trie& trie, bool with_ids = true);

/// Cross-snapshot no-resurrection check: feeds on consecutive audits'
/// reachable id sets and reports ids that left and came back.
class SnapshotTracker {
 public:
  /// Returns the ids that violate no-resurrection (empty when fine).
  std::vector<uint64_t> observe(const std::vector<uint64_t>& reachable_ids);

 private:
  std::unordered_set<uint64_t> previous_;
  std::unordered_set<uint64_t> departed_;
  bool first_ = true;
};

}  // namespace patricia::harness
