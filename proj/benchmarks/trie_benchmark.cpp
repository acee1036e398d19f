#include <benchmark/benchmark.h>

#include "patricia/bench.hpp"
#include "patricia/trie.hpp"

namespace {

constexpr uint32_t kKeyBits = 20;
constexpr uint64_t kRange = 1 << 16;

patricia::Trie& shared_trie() {
  static patricia::Trie trie(kKeyBits);
  static bool filled = [] {
    patricia::bench::WorkloadConfig cfg;
    cfg.key_bits = kKeyBits;
    cfg.range = kRange;
    patricia::bench::prefill(trie, cfg);
    return true;
  }();
  (void)filled;
  return trie;
}

void BM_Contains(benchmark::State& state) {
  patricia::Trie& trie = shared_trie();
  uint64_t key = 1 + static_cast<uint64_t>(state.thread_index());
  for (auto _ : state) {
    benchmark::DoNotOptimize(trie.contains(key));
    key = key * 6364136223846793005ULL % (kRange - 1) + 1;
  }
}
BENCHMARK(BM_Contains)->Threads(1)->Threads(2)->Threads(4);

void BM_InsertErase(benchmark::State& state) {
  patricia::Trie& trie = shared_trie();
  uint64_t key = 1 + static_cast<uint64_t>(state.thread_index());
  for (auto _ : state) {
    trie.insert(key);
    trie.erase(key);
    key = key * 6364136223846793005ULL % (kRange - 1) + 1;
  }
}
BENCHMARK(BM_InsertErase)->Threads(1)->Threads(2)->Threads(4);

void BM_Replace(benchmark::State& state) {
  patricia::Trie trie(kKeyBits);
  uint64_t a = 100, b = 200;
  trie.insert(a);
  for (auto _ : state) {
    trie.replace(a, b);
    std::swap(a, b);
  }
}
BENCHMARK(BM_Replace);

void BM_MixedWorkload(benchmark::State& state) {
  patricia::Trie& trie = shared_trie();
  patricia::bench::OpGen gen(7 + static_cast<uint64_t>(state.thread_index()),
                             {5, 5, 0, 90}, kRange, 0);
  for (auto _ : state) {
    const auto op = gen.next();
    switch (op.kind) {
      case 0: trie.insert(op.a0); break;
      case 1: trie.erase(op.a0); break;
      case 2: trie.replace(op.a0, op.a1); break;
      default: benchmark::DoNotOptimize(trie.contains(op.a0)); break;
    }
  }
}
BENCHMARK(BM_MixedWorkload)->Threads(1)->Threads(2)->Threads(4);

}  // namespace

BENCHMARK_MAIN();
