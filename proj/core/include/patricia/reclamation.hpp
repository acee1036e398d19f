/// \file reclamation.hpp
/// \brief Epoch-based deferred reclamation for trie nodes and descriptors.
///
/// Every public trie operation pins the domain for its duration. An object
/// passed to retire() is freed only once every guard that was active at the
/// retire call has been dropped, so readers never observe freed memory and
/// stale CAS expected-values can never be re-satisfied by recycled addresses.

#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>

namespace patricia::reclamation {

class Domain;

/// Per-thread protection token, active for the duration of one operation.
/// Nested pins on one thread are reference-counted. Not thread-migratable.
class Guard {
 public:
  Guard() = default;
  Guard(Guard&& o) noexcept : domain_(o.domain_) { o.domain_ = nullptr; }
  Guard& operator=(Guard&& o) noexcept;
  Guard(const Guard&) = delete;
  Guard& operator=(const Guard&) = delete;
  ~Guard();

 private:
  friend class Domain;
  explicit Guard(Domain* d) : domain_(d) {}
  Domain* domain_ = nullptr;
};

class Domain {
 public:
  /// `reclaim` = false keeps retired objects queued until destruction;
  /// used for differential testing.
  explicit Domain(bool reclaim = true);
  ~Domain();
  Domain(const Domain&) = delete;
  Domain& operator=(const Domain&) = delete;

  /// Starts (or nests) this thread's protected section.
  Guard pin();

  /// Queues `p` for deferred deletion. `p` must already be unreachable from
  /// the shared structure and must never be a CAS target again.
  template <typename T>
  void retire(T* p) {
    retire_impl(p, [](void* q) { delete static_cast<T*>(q); });
  }

  /// Reclamation tick: frees every queued object whose grace period has
  /// elapsed and tries to advance the epoch. Safe to call from any thread.
  void collect();

  /// Number of retired objects not yet freed.
  std::size_t retired_pending() const { return retired_count_.load(); }

  bool any_active_guard() const;

  // Allocation bookkeeping for leak audits. The trie counts every node and
  // descriptor it allocates; frees are counted by the retire path and by
  // count_free_direct() for objects deleted without retiring.
  void count_alloc() { allocated_.fetch_add(1); }
  void count_free_direct() { reclaimed_.fetch_add(1); }
  uint64_t allocated() const { return allocated_.load(); }
  uint64_t reclaimed() const { return reclaimed_.load(); }
  int64_t live() const {
    return static_cast<int64_t>(allocated_.load()) -
           static_cast<int64_t>(reclaimed_.load());
  }

  static constexpr std::size_t kMaxThreads = 256;
  /// Retires accumulated per thread before an automatic collect() runs.
  static constexpr uint32_t kCollectPeriod = 64;

 private:
  friend class Guard;

  struct Slot {
    std::atomic<uint64_t> announce{kIdle};
    std::atomic<bool> used{false};
    uint32_t depth = 0;  // owner thread only
    uint32_t retires_since_collect = 0;
  };

  struct Retired {
    void* p;
    void (*del)(void*);
    std::atomic<uint64_t> epoch{kEpochPending};
    Retired* next;
  };

  static constexpr uint64_t kIdle = ~uint64_t{0};
  static constexpr uint64_t kEpochPending = ~uint64_t{0};

  void unpin();
  Slot* my_slot();
  void release_slot(uint32_t index);
  void retire_impl(void* p, void (*del)(void*));
  uint64_t min_active_announce() const;
  void try_advance();

  // Distinguishes this domain from a dead one that occupied the same
  // address; thread-local slot caches check it.
  const uint64_t instance_id_;

  std::atomic<uint64_t> epoch_{1};
  std::atomic<Retired*> retired_head_{nullptr};
  std::atomic<std::size_t> retired_count_{0};
  std::atomic<uint64_t> allocated_{0};
  std::atomic<uint64_t> reclaimed_{0};
  std::array<Slot, kMaxThreads> slots_;
  bool reclaim_enabled_;

  friend struct ThreadSlotRegistry;
};

inline Guard::~Guard() {
  if (domain_ != nullptr) domain_->unpin();
}

inline Guard& Guard::operator=(Guard&& o) noexcept {
  if (this != &o) {
    if (domain_ != nullptr) domain_->unpin();
    domain_ = o.domain_;
    o.domain_ = nullptr;
  }
  return *this;
}

}  // namespace patricia::reclamation
