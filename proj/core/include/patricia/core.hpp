/// \file core.hpp
/// \brief Shared-memory trie internals: node and descriptor types with atomic
/// slots, plus the search / help / newFlag / createNode machinery that the
/// public set operations are built on.
///
/// This header exposes the structure of the trie so that the invariant
/// auditor and the test suites can inspect and stage it directly. Application
/// code should use patricia::Trie from trie.hpp instead.
///
/// Concurrency notes:
///  - Every atomic load, store and CAS uses sequentially consistent ordering.
///  - Slots are compared by object identity. Info slots are never reused:
///    each unflag or backtrack installs a freshly allocated UnflagRecord,
///    which is what defeats ABA on the info fields.
///  - search() is wait-free and performs no writes to the structure;
///    mutation happens only through the flag / child / unflag / backtrack
///    CAS steps in help() plus the two plain stores (flagDone, rmvLeaf.info).

#pragma once

#include <array>
#include <atomic>
#include <cassert>
#include <cstdint>

#include "patricia/keys.hpp"
#include "patricia/reclamation.hpp"

namespace patricia::core {

struct Node;
struct Internal;
struct Leaf;

/// Operation descriptor base. UnflagRecord means "no update in progress".
struct Info {
  const bool is_flag;

 protected:
  explicit constexpr Info(bool f) : is_flag(f) {}
};

struct UnflagRecord final : Info {
  constexpr UnflagRecord() : Info(false) {}
};

/// Descriptor of an in-progress update. Carries everything a helper needs:
/// which internal nodes to flag (with the expected old info values), which
/// child slots to swing, which nodes to unflag afterwards, and the leaf to
/// mark when a two-step replace logically removes it. All fields except
/// flag_done are immutable after construction.
struct FlagRecord final : Info {
  static constexpr int kMaxFlagTargets = 4;
  static constexpr int kMaxChildCas = 2;

  FlagRecord() : Info(true) {}

  std::array<Internal*, kMaxFlagTargets> flag_targets{};
  std::array<Info*, kMaxFlagTargets> old_info{};
  uint8_t flag_count = 0;

  std::array<Internal*, kMaxChildCas> unflag_targets{};
  uint8_t unflag_count = 0;

  std::array<Internal*, kMaxChildCas> cas_parent{};  // pNode
  std::array<Node*, kMaxChildCas> old_child{};
  std::array<Node*, kMaxChildCas> new_child{};
  uint8_t cas_count = 0;

  Leaf* rmv_leaf = nullptr;

  std::atomic<bool> flag_done{false};

  // Reclamation plan: nodes that become unreachable at slot i's child CAS
  // in addition to old_child[i]. Filled in by the operation that builds the
  // record; consumed by whichever helper wins that child CAS.
  std::array<std::array<Node*, 2>, kMaxChildCas> extra_removed{};
  std::array<uint8_t, kMaxChildCas> extra_removed_count{};

  // Instrumentation and exactly-once coordination between helpers.
  //
  // observed_mask: bit i set when a helper saw flag_targets[i].info == this,
  // always ascending within one helper, so the mask is prefix-closed at all
  // times and order checks on it are race-free.
  //
  // superseded_mask: bit i set when there is evidence old_info[i] was
  // replaced by a flag CAS (an observation, or winning the backtrack CAS);
  // drives old-info retirement.
  std::atomic<uint32_t> observed_mask{0};
  std::atomic<uint32_t> superseded_mask{0};
  std::array<std::atomic<bool>, kMaxChildCas> child_cas_done{};
  std::array<std::atomic<bool>, kMaxChildCas> removed_retired{};
  std::array<std::atomic<bool>, kMaxFlagTargets> old_info_retired{};
  std::atomic<bool> completion_claimed{false};
  std::atomic<uint32_t> help_calls{0};
};

struct Node {
  const Label label;
  const uint64_t id;  // creation id; stable identity for audits
  const bool internal;
  std::atomic<Info*> info;

 protected:
  Node(const Label& l, uint64_t id_, bool internal_, Info* inf)
      : label(l), id(id_), internal(internal_), info(inf) {}
};

struct Leaf final : Node {
  Leaf(const Label& l, uint64_t id_, Info* inf) : Node(l, id_, false, inf) {}
};

struct Internal final : Node {
  Internal(const Label& l, uint64_t id_, Info* inf, Node* c0, Node* c1)
      : Node(l, id_, true, inf) {
    child[0].store(c0);
    child[1].store(c1);
  }
  std::array<std::atomic<Node*>, 2> child;
};

inline const Leaf* as_leaf(const Node* n) {
  assert(!n->internal);
  return static_cast<const Leaf*>(n);
}
inline Leaf* as_leaf(Node* n) {
  assert(!n->internal);
  return static_cast<Leaf*>(n);
}
inline const Internal* as_internal(const Node* n) {
  assert(n->internal);
  return static_cast<const Internal*>(n);
}
inline Internal* as_internal(Node* n) {
  assert(n->internal);
  return static_cast<Internal*>(n);
}

/// Which arm of the replace dispatch built the winning record.
enum class ReplaceCase : int {
  kGeneral = 0,            // two child CAS steps, disjoint locations
  kTargetIsVictim = 1,     // node_i == node_d
  kTargetIsParent = 2,     // node_i == p_d and p_i == gp_d
  kSameParent = 3,         // p_i == p_d (and gp_d != null)
  kTargetIsGrandparent = 4 // node_i == gp_d
};
inline constexpr int kReplaceCaseCount = 5;

/// Always-on counters. Violation counters stay zero on correct executions;
/// the concurrent suites assert that.
struct Stats {
  std::atomic<uint64_t> child_cas_double_wins{0};   // >1 successful child CAS per slot
  std::atomic<uint64_t> flag_order_violations{0};   // flag CAS out of label order
  std::atomic<uint32_t> max_search_iterations{0};
  std::atomic<uint64_t> failed_update_child_cas{0};
  std::atomic<uint64_t> incomplete_success_child_cas{0};
  std::atomic<uint64_t> retries_total{0};
  std::atomic<uint64_t> help_invocations{0};
  std::array<std::atomic<uint64_t>, kReplaceCaseCount> replace_dispatch{};

  void note_search_iterations(uint32_t iters) {
    uint32_t cur = max_search_iterations.load();
    while (iters > cur && !max_search_iterations.compare_exchange_weak(cur, iters)) {
    }
  }
};

/// The sextuple returned by search plus the loop-iteration count.
struct SearchResult {
  Internal* gp = nullptr;
  Internal* p = nullptr;
  Node* node = nullptr;
  Info* gp_info = nullptr;
  Info* p_info = nullptr;
  bool rmvd = false;
  uint32_t iterations = 0;
};

/// Raw newFlag arguments, before duplicate removal and sorting.
struct FlagArgs {
  std::array<Internal*, FlagRecord::kMaxFlagTargets> flag{};
  std::array<Info*, FlagRecord::kMaxFlagTargets> old_info{};
  uint8_t flag_count = 0;

  std::array<Internal*, FlagRecord::kMaxChildCas> unflag{};
  uint8_t unflag_count = 0;

  std::array<Internal*, FlagRecord::kMaxChildCas> cas_parent{};
  std::array<Node*, FlagRecord::kMaxChildCas> old_child{};
  std::array<Node*, FlagRecord::kMaxChildCas> new_child{};
  uint8_t cas_count = 0;

  Leaf* rmv_leaf = nullptr;

  std::array<std::array<Node*, 2>, FlagRecord::kMaxChildCas> extra_removed{};
  std::array<uint8_t, FlagRecord::kMaxChildCas> extra_removed_count{};
};

/// The trie's shared state and the routines all operations are built from.
/// The root pointer is fixed at construction and never replaced; the root
/// label is empty and its two initial children are the sentinel leaves
/// 0^width and 1^width.
class TrieCore {
 public:
  TrieCore(uint32_t width, reclamation::Domain& domain);
  ~TrieCore();
  TrieCore(const TrieCore&) = delete;
  TrieCore& operator=(const TrieCore&) = delete;

  uint32_t width() const { return width_; }
  Internal* root() const { return root_; }
  reclamation::Domain& domain() const { return domain_; }
  const Stats& stats() const { return stats_; }
  Stats& stats() { return stats_; }

  /// Wait-free descent from the root: at each step reads the node's info
  /// slot strictly before its child slot and follows the bit of `v` after
  /// the node's label. Stops at a leaf or at an internal node whose label
  /// is not a prefix of `v`. Runs at most width() iterations.
  SearchResult search(const Key& v) const;

  bool key_in_trie(const Node* node, const Key& v, bool rmvd) const {
    return !node->internal && node->label == v.label() && !rmvd;
  }

  /// True iff the record's first child CAS already swung old_child[0] out
  /// of cas_parent[0]: the leaf carrying this record is logically removed.
  bool logically_removed(const Info* info) const;

  /// Builds the internal node joining n1 and n2, placed by the bit after
  /// their longest common prefix. If either label is a prefix of the other
  /// there is nothing to build: helps `info` if it is a flag record and
  /// returns null. A null `info` means "no helping on conflict".
  Internal* create_node(Node* n1, Node* n2, Info* info);

  /// Validates and assembles a flag record: helps and rejects if any old
  /// info value is a flag record; rejects duplicate flag targets whose old
  /// values differ; otherwise dedups, sorts flag targets by label order and
  /// returns a fresh record. Null return means the caller must retry.
  FlagRecord* new_flag(const FlagArgs& args);

  /// Carries out the real work of an update. Phase 1 flags the targets in
  /// label order; if all are flagged, phase 2 marks the removed leaf (for
  /// two-step replaces) and performs the child CAS steps; phase 3 unflags
  /// survivors (flag_done read back true) or backtracks (false). The return
  /// value tells the owning operation whether its update took effect.
  bool help(FlagRecord* rec);

  // Allocation helpers. Everything allocated here is counted in the domain
  // so leak audits can balance the books.
  UnflagRecord* make_unflag();
  Leaf* make_leaf(const Label& l);
  Internal* make_internal(const Label& l, Node* c0, Node* c1);
  Node* copy_node(const Node* n);

  /// Queues a node that was created for an attempt but never published
  /// (its fresh info record goes with it). Children are left alone.
  void retire_unpublished(Node* n);

  /// Immediate deletion for teardown and for fresh unflags whose CAS lost.
  void destroy(Node* n);
  void destroy(Info* i);

 private:
  void retire_removed(FlagRecord* rec, uint8_t slot);
  void retire_removed_node(FlagRecord* rec, Node* n);
  void retire_old_info(FlagRecord* rec, uint8_t index);
  void note_superseded(FlagRecord* rec, uint8_t index, bool observed_in_order);

  uint32_t width_;
  reclamation::Domain& domain_;
  Internal* root_;
  mutable Stats stats_;
  std::atomic<uint64_t> next_node_id_{0};
};

}  // namespace patricia::core
