/// \file trie.hpp
/// \brief Public concurrent set interface over the Patricia trie core.
///
/// The trie stores a set of keys encoded as fixed-width bit strings. Lookups
/// are wait-free and never write; insert, erase and replace are lock-free.
/// replace(old_key, new_key) removes one key and adds another atomically:
/// no concurrent observer can see a state with both or neither.
///
/// The keys 0 and 2^width - 1 are reserved as sentinels and cannot be stored.

#pragma once

#include <cstdint>
#include <stdexcept>

#include "patricia/core.hpp"
#include "patricia/keys.hpp"
#include "patricia/reclamation.hpp"

namespace patricia {

/// Thrown when an operation is given one of the two reserved sentinel keys.
class ReservedKeyError : public std::invalid_argument {
 public:
  explicit ReservedKeyError(uint64_t key)
      : std::invalid_argument("reserved sentinel key: " + std::to_string(key)) {}
};

/// Thrown by replace() when both arguments are the same key; the operation
/// would be unsatisfiable and the call is a caller bug.
class SelfReplaceError : public std::invalid_argument {
 public:
  SelfReplaceError() : std::invalid_argument("replace: keys must differ") {}
};

/// Update outcome plus the number of retry-loop iterations it took.
struct OpResult {
  bool ok = false;
  uint32_t retries = 0;
  explicit operator bool() const { return ok; }
};

class Trie {
 public:
  /// `width` is the key width in bits (1..64); storable keys are the
  /// integers in (0, 2^width - 1) exclusive. `reclaim` = false defers all
  /// reclamation to destruction (differential testing only).
  explicit Trie(uint32_t width = 64, bool reclaim = true);

  Trie(const Trie&) = delete;
  Trie& operator=(const Trie&) = delete;

  /// Adds `key` if absent. Returns whether the set changed.
  OpResult insert(uint64_t key);

  /// Removes `key` if present. Returns whether the set changed.
  OpResult erase(uint64_t key);

  /// Atomically removes `old_key` and adds `new_key`. Succeeds iff old_key
  /// was present and new_key absent; otherwise changes nothing.
  OpResult replace(uint64_t old_key, uint64_t new_key);

  /// Wait-free membership query.
  bool contains(uint64_t key) const;

  uint32_t width() const { return core_.width(); }

  // Internals, exposed for the audit tooling, the harness and the tests.
  core::TrieCore& core() { return core_; }
  const core::TrieCore& core() const { return core_; }
  const core::Stats& stats() const { return core_.stats(); }
  reclamation::Domain& domain() const { return domain_; }

 private:
  Key checked_key(uint64_t key) const;

  mutable reclamation::Domain domain_;
  core::TrieCore core_;
};

}  // namespace patricia
