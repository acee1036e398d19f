#include "patricia/lincheck.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cassert>
#include <limits>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace patricia::harness {

namespace {

struct SplitMix64 {
  uint64_t x;
  explicit SplitMix64(uint64_t seed) : x(seed) {}
  uint64_t next() {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }
};

}  // namespace

History run_workload(Trie& trie, const WorkloadSpec& spec) {
  assert(!spec.keys.empty());
  assert(spec.mix[0] + spec.mix[1] + spec.mix[2] + spec.mix[3] == 100);

  std::vector<std::vector<HistoryEvent>> buffers(spec.threads);
  for (auto& b : buffers) b.reserve(2 * spec.ops_per_thread);
  std::atomic<uint64_t> clock{0};
  std::atomic<bool> go{false};

  auto worker = [&](uint32_t tid) {
    SplitMix64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + tid + 1);
    auto& buf = buffers[tid];
    while (!go.load()) {
    }
    for (uint32_t i = 0; i < spec.ops_per_thread; ++i) {
      const int roll = static_cast<int>(rng.next() % 100);
      OpKind op;
      if (roll < spec.mix[0])
        op = OpKind::kInsert;
      else if (roll < spec.mix[0] + spec.mix[1])
        op = OpKind::kErase;
      else if (roll < spec.mix[0] + spec.mix[1] + spec.mix[2])
        op = OpKind::kReplace;
      else
        op = OpKind::kFind;

      uint64_t a0 = spec.keys[rng.next() % spec.keys.size()];
      uint64_t a1 = 0;
      if (op == OpKind::kReplace) {
        if (spec.keys.size() < 2) op = OpKind::kFind;
        else {
          do {
            a1 = spec.keys[rng.next() % spec.keys.size()];
          } while (a1 == a0);
        }
      }

      buf.push_back({clock.fetch_add(1), tid, op, a0, a1, true, false});
      bool result = false;
      switch (op) {
        case OpKind::kInsert: result = trie.insert(a0).ok; break;
        case OpKind::kErase: result = trie.erase(a0).ok; break;
        case OpKind::kReplace: result = trie.replace(a0, a1).ok; break;
        case OpKind::kFind: result = trie.contains(a0); break;
      }
      buf.push_back({clock.fetch_add(1), tid, op, a0, a1, false, result});
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(spec.threads);
  for (uint32_t t = 0; t < spec.threads; ++t) threads.emplace_back(worker, t);
  go.store(true);
  for (auto& t : threads) t.join();

  History h;
  h.thread_count = spec.threads;
  for (auto& b : buffers)
    h.events.insert(h.events.end(), b.begin(), b.end());
  std::sort(h.events.begin(), h.events.end(),
            [](const HistoryEvent& a, const HistoryEvent& b) { return a.ts < b.ts; });
  return h;
}

namespace {

constexpr uint64_t kNoRespond = std::numeric_limits<uint64_t>::max();

struct Operation {
  OpKind op;
  uint64_t a0, a1;
  uint64_t invoke_ts;
  uint64_t respond_ts = kNoRespond;  // kNoRespond while pending
  bool result = false;
  bool pending() const { return respond_ts == kNoRespond; }
};

struct PairHash {
  std::size_t operator()(const std::pair<uint64_t, uint64_t>& p) const {
    uint64_t h = p.first * 0x9e3779b97f4a7c15ULL;
    h ^= p.second + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Groups a history's events into operations, enforcing per-thread
// invoke/respond alternation.
std::vector<Operation> group_operations(const History& h) {
  std::vector<Operation> ops;
  std::unordered_map<uint32_t, int> open;  // thread -> index of pending op
  for (const HistoryEvent& e : h.events) {
    if (e.is_invoke) {
      if (open.count(e.thread) != 0)
        throw std::invalid_argument("malformed history: nested invoke");
      open[e.thread] = static_cast<int>(ops.size());
      ops.push_back({e.op, e.arg0, e.arg1, e.ts});
    } else {
      auto it = open.find(e.thread);
      if (it == open.end())
        throw std::invalid_argument("malformed history: respond without invoke");
      Operation& op = ops[static_cast<std::size_t>(it->second)];
      if (op.op != e.op || op.a0 != e.arg0 || op.a1 != e.arg1)
        throw std::invalid_argument("malformed history: respond mismatch");
      op.respond_ts = e.ts;
      op.result = e.result;
      open.erase(it);
    }
  }
  return ops;
}

class Checker {
 public:
  Checker(const std::vector<Operation>& ops, uint64_t budget)
      : ops_(ops), budget_(budget) {
    for (const Operation& op : ops_) {
      keys_.push_back(op.a0);
      if (op.op == OpKind::kReplace) keys_.push_back(op.a1);
    }
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
  }

  Verdict run(std::vector<uint32_t>& witness, uint64_t& states) {
    if (ops_.size() > 64 || keys_.size() > 64) return Verdict::kInconclusive;
    witness_.clear();
    exhausted_ = false;
    const bool ok = dfs(0, 0);
    states = states_;
    if (ok) {
      witness = witness_;
      return Verdict::kLinearizable;
    }
    return exhausted_ ? Verdict::kInconclusive : Verdict::kViolation;
  }

 private:
  uint64_t key_bit(uint64_t key) const {
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    return uint64_t{1} << static_cast<uint64_t>(it - keys_.begin());
  }

  // Applies op to the contents bitmask; returns {new contents, result}.
  std::pair<uint64_t, bool> apply(uint64_t contents, const Operation& op) const {
    const uint64_t b0 = key_bit(op.a0);
    switch (op.op) {
      case OpKind::kInsert:
        if ((contents & b0) != 0) return {contents, false};
        return {contents | b0, true};
      case OpKind::kErase:
        if ((contents & b0) == 0) return {contents, false};
        return {contents & ~b0, true};
      case OpKind::kReplace: {
        const uint64_t b1 = key_bit(op.a1);
        if ((contents & b0) == 0 || (contents & b1) != 0) return {contents, false};
        return {(contents & ~b0) | b1, true};
      }
      case OpKind::kFind:
        return {contents, (contents & b0) != 0};
    }
    return {contents, false};
  }

  bool dfs(uint64_t taken, uint64_t contents) {
    if (std::popcount(taken) == static_cast<int>(ops_.size())) return true;
    if (++states_ > budget_) {
      exhausted_ = true;
      return false;
    }
    if (!memo_.insert({taken, contents}).second) return false;

    // Minimum respond timestamp over untaken completed ops: an op may be
    // linearized next only if no untaken op responded before it was invoked.
    uint64_t min_respond = kNoRespond;
    for (uint32_t i = 0; i < ops_.size(); ++i)
      if ((taken & (uint64_t{1} << i)) == 0)
        min_respond = std::min(min_respond, ops_[i].respond_ts);

    for (uint32_t i = 0; i < ops_.size(); ++i) {
      const uint64_t bit = uint64_t{1} << i;
      if ((taken & bit) != 0) continue;
      const Operation& op = ops_[i];
      if (op.invoke_ts >= min_respond && op.respond_ts != min_respond) continue;

      if (!op.pending()) {
        auto [next, result] = apply(contents, op);
        if (result != op.result) continue;
        witness_.push_back(i);
        if (dfs(taken | bit, next)) return true;
        witness_.pop_back();
        if (exhausted_) return false;
      } else {
        // A pending op may have taken effect...
        auto [next, result] = apply(contents, op);
        (void)result;
        witness_.push_back(i);
        if (dfs(taken | bit, next)) return true;
        witness_.pop_back();
        if (exhausted_) return false;
        // ...or not; dropping it costs nothing against the oracle.
        witness_.push_back(i);
        if (dfs(taken | bit, contents)) return true;
        witness_.pop_back();
        if (exhausted_) return false;
      }
    }
    return false;
  }

  const std::vector<Operation>& ops_;
  std::vector<uint64_t> keys_;
  std::unordered_set<std::pair<uint64_t, uint64_t>, PairHash> memo_;
  std::vector<uint32_t> witness_;
  uint64_t budget_;
  uint64_t states_ = 0;
  bool exhausted_ = false;
};

Verdict check_once(const History& h, uint64_t budget, std::vector<uint32_t>& witness,
                   uint64_t& states) {
  const std::vector<Operation> ops = group_operations(h);
  Checker checker(ops, budget);
  return checker.run(witness, states);
}

}  // namespace

CheckResult check_linearizable(const History& h, uint64_t state_budget) {
  CheckResult result;
  result.verdict = check_once(h, state_budget, result.witness, result.states_explored);
  if (result.verdict != Verdict::kViolation) return result;

  // Shrink to the shortest event prefix that already fails.
  for (std::size_t k = 1; k <= h.events.size(); ++k) {
    History prefix;
    prefix.thread_count = h.thread_count;
    prefix.events.assign(h.events.begin(), h.events.begin() + static_cast<long>(k));
    std::vector<uint32_t> w;
    uint64_t states = 0;
    if (check_once(prefix, state_budget, w, states) == Verdict::kViolation) {
      result.violating_prefix = prefix.events;
      break;
    }
  }
  return result;
}

}  // namespace patricia::harness
