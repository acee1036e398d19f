/// \file history.hpp
/// \brief Concurrent-history events, the sequential set oracle, and the
/// newline-delimited history serialization used by replay tooling.

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace patricia::harness {

enum class OpKind : int { kInsert = 0, kErase = 1, kReplace = 2, kFind = 3 };

const char* op_name(OpKind op);

/// One invoke or respond record. Timestamps come from a single global
/// monotonic sequence, so they are unique and totally ordered.
struct HistoryEvent {
  uint64_t ts = 0;
  uint32_t thread = 0;
  OpKind op = OpKind::kFind;
  uint64_t arg0 = 0;
  uint64_t arg1 = 0;  // second key of replace
  bool is_invoke = true;
  bool result = false;  // meaningful on respond events

  friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

struct History {
  uint32_t thread_count = 0;
  std::vector<HistoryEvent> events;  // ascending by ts
};

/// Plain sorted set implementing the trie's sequential specification;
/// replace is a single primitive, not a delete plus an insert.
class OracleSet {
 public:
  bool insert(uint64_t v) { return set_.insert(v).second; }
  bool erase(uint64_t v) { return set_.erase(v) != 0; }
  bool contains(uint64_t v) const { return set_.count(v) != 0; }

  /// Succeeds iff `vd` is present and `vi` absent; then removes vd and adds
  /// vi as one step.
  bool replace(uint64_t vd, uint64_t vi) {
    if (set_.count(vd) == 0 || set_.count(vi) != 0) return false;
    set_.erase(vd);
    set_.insert(vi);
    return true;
  }

  bool apply(OpKind op, uint64_t a0, uint64_t a1) {
    switch (op) {
      case OpKind::kInsert: return insert(a0);
      case OpKind::kErase: return erase(a0);
      case OpKind::kReplace: return replace(a0, a1);
      case OpKind::kFind: return contains(a0);
    }
    return false;
  }

  std::size_t size() const { return set_.size(); }
  const std::set<uint64_t>& contents() const { return set_; }

 private:
  std::set<uint64_t> set_;
};

/// Format: one event per line, `ts thread op args phase [result]`, e.g.
///   3 0 insert 5 invoke
///   7 0 insert 5 respond true
///   9 1 replace 5 6 invoke
std::string serialize(const History& h);
History parse_history(std::string_view text);

}  // namespace patricia::harness
