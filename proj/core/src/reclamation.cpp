#include "patricia/reclamation.hpp"

#include <cassert>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

namespace patricia::reclamation {

namespace {

std::atomic<uint64_t> g_next_instance_id{1};

// Domains a thread has slots in may be destroyed before the thread exits,
// so the thread-exit cleanup consults a registry of live domains. Instance
// ids guard against a new domain reusing a dead one's address.
std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::unordered_map<const Domain*, uint64_t>& live_domains() {
  static std::unordered_map<const Domain*, uint64_t> s;
  return s;
}

}  // namespace

struct ThreadSlotRegistry {
  struct Entry {
    Domain* domain;
    uint64_t instance_id;
    uint32_t slot;
  };
  std::vector<Entry> entries;

  ~ThreadSlotRegistry() {
    std::lock_guard<std::mutex> lock(registry_mutex());
    for (const Entry& e : entries) {
      auto it = live_domains().find(e.domain);
      if (it != live_domains().end() && it->second == e.instance_id)
        e.domain->release_slot(e.slot);
    }
  }
};

namespace {
thread_local ThreadSlotRegistry t_slots;
}

Domain::Domain(bool reclaim)
    : instance_id_(g_next_instance_id.fetch_add(1)), reclaim_enabled_(reclaim) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  live_domains().emplace(this, instance_id_);
}

Domain::~Domain() {
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    live_domains().erase(this);
  }
  // Destruction requires quiescence: no guards, no concurrent retires.
  Retired* r = retired_head_.exchange(nullptr);
  while (r != nullptr) {
    Retired* next = r->next;
    r->del(r->p);
    reclaimed_.fetch_add(1);
    retired_count_.fetch_sub(1);
    delete r;
    r = next;
  }
}

Domain::Slot* Domain::my_slot() {
  ThreadSlotRegistry::Entry* stale = nullptr;
  for (auto& e : t_slots.entries) {
    if (e.domain != this) continue;
    if (e.instance_id == instance_id_) return &slots_[e.slot];
    stale = &e;  // same address, earlier incarnation
  }
  for (uint32_t i = 0; i < kMaxThreads; ++i) {
    bool expected = false;
    if (slots_[i].used.compare_exchange_strong(expected, true)) {
      slots_[i].announce.store(kIdle);
      slots_[i].depth = 0;
      slots_[i].retires_since_collect = 0;
      if (stale != nullptr)
        *stale = {this, instance_id_, i};
      else
        t_slots.entries.push_back({this, instance_id_, i});
      return &slots_[i];
    }
  }
  assert(false && "reclamation domain thread slots exhausted");
  return nullptr;
}

void Domain::release_slot(uint32_t index) {
  slots_[index].announce.store(kIdle);
  slots_[index].used.store(false);
}

Guard Domain::pin() {
  Slot* s = my_slot();
  if (s->depth++ == 0) s->announce.store(epoch_.load());
  return Guard(this);
}

void Domain::unpin() {
  Slot* s = my_slot();
  assert(s->depth > 0);
  if (--s->depth == 0) s->announce.store(kIdle);
}

bool Domain::any_active_guard() const {
  for (const Slot& s : slots_)
    if (s.used.load() && s.announce.load() != kIdle) return true;
  return false;
}

uint64_t Domain::min_active_announce() const {
  uint64_t m = kIdle;
  for (const Slot& s : slots_) {
    if (!s.used.load()) continue;
    uint64_t a = s.announce.load();
    if (a < m) m = a;
  }
  return m;
}

void Domain::retire_impl(void* p, void (*del)(void*)) {
  auto* r = new Retired{p, del, {kEpochPending}, nullptr};
  retired_count_.fetch_add(1);
  Retired* head = retired_head_.load();
  do {
    r->next = head;
  } while (!retired_head_.compare_exchange_weak(head, r));
  // The epoch is recorded after publication so it upper-bounds the epoch any
  // guard active at the retire call could have announced.
  r->epoch.store(epoch_.load());

  if (reclaim_enabled_) {
    Slot* s = my_slot();
    if (++s->retires_since_collect >= kCollectPeriod) {
      s->retires_since_collect = 0;
      collect();
    }
  }
}

void Domain::try_advance() {
  uint64_t e = epoch_.load();
  for (const Slot& s : slots_) {
    if (!s.used.load()) continue;
    uint64_t a = s.announce.load();
    if (a != kIdle && a < e) return;
  }
  epoch_.compare_exchange_strong(e, e + 1);
}

void Domain::collect() {
  if (!reclaim_enabled_) return;
  try_advance();

  Retired* batch = retired_head_.exchange(nullptr);
  if (batch == nullptr) return;

  const uint64_t min_announce = min_active_announce();

  Retired* keep_head = nullptr;
  Retired* keep_tail = nullptr;
  while (batch != nullptr) {
    Retired* next = batch->next;
    const uint64_t e = batch->epoch.load();
    // An object is freed once every guard that might have been active at its
    // retire call is gone: such guards announced at most e.
    if (e != kEpochPending && (min_announce == kIdle || min_announce >= e + 1)) {
      batch->del(batch->p);
      reclaimed_.fetch_add(1);
      retired_count_.fetch_sub(1);
      delete batch;
    } else {
      batch->next = keep_head;
      keep_head = batch;
      if (keep_tail == nullptr) keep_tail = batch;
    }
    batch = next;
  }

  if (keep_head != nullptr) {
    Retired* head = retired_head_.load();
    do {
      keep_tail->next = head;
    } while (!retired_head_.compare_exchange_weak(head, keep_head));
  }
}

}  // namespace patricia::reclamation
