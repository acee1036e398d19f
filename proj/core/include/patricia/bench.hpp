/// \file bench.hpp
/// \brief Workload definitions for the benchmark CLI: prefill, timed mixed
/// trials and CSV reporting.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "patricia/trie.hpp"

namespace patricia::bench {

struct MixRatio {
  int insert_pct = 0;
  int erase_pct = 0;
  int replace_pct = 0;
  int find_pct = 0;

  int sum() const { return insert_pct + erase_pct + replace_pct + find_pct; }
  bool valid() const {
    return insert_pct >= 0 && erase_pct >= 0 && replace_pct >= 0 &&
           find_pct >= 0 && sum() == 100;
  }
};

/// Parses "i:d:r:f" percentages, e.g. "5:5:0:90".
std::optional<MixRatio> parse_mix(std::string_view s);

/// Canonical mix name, e.g. "i5-d5-r0-f90".
std::string mix_name(const MixRatio& mix);

struct WorkloadConfig {
  uint32_t threads = 4;
  double secs = 4.0;
  uint32_t key_bits = 20;
  uint64_t range = 1'000'000;  // keys drawn from [1, range)
  MixRatio mix{5, 5, 0, 90};
  uint32_t trials = 8;
  uint64_t seed = 1;
  uint32_t run_length = 0;  // 0 = uniform keys; L = runs of L consecutive keys
  bool prefill = true;
  double warmup_secs = 0.0;

  /// Empty string when valid, else a usage-error message.
  std::string validate() const;
};

struct TrialResult {
  std::array<uint64_t, 4> ops{};  // completed per kind: insert/delete/replace/find
  double elapsed = 0.0;

  uint64_t total() const { return ops[0] + ops[1] + ops[2] + ops[3]; }
  double throughput() const { return elapsed > 0 ? static_cast<double>(total()) / elapsed : 0.0; }
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev over >= 2 trials
};
Summary summarize(const std::vector<TrialResult>& trials);

/// Deterministic operation stream: uniform keys in [1, range) or, with
/// run_length L, runs of L consecutive keys from random starting points.
class OpGen {
 public:
  struct Op {
    int kind;  // 0 insert, 1 delete, 2 replace, 3 find
    uint64_t a0;
    uint64_t a1;
  };

  OpGen(uint64_t seed, const MixRatio& mix, uint64_t range, uint32_t run_length);
  Op next();

 private:
  uint64_t next_key();
  uint64_t rand64();

  uint64_t state_;
  MixRatio mix_;
  uint64_t range_;
  uint32_t run_length_;
  uint32_t run_left_ = 0;
  uint64_t run_key_ = 0;
};

/// Fills a fresh trie with the i50-d50-f0 mix over the key range, one
/// update per key in the range, single-threaded and deterministic from the
/// seed, leaving the set approximately half-full.
void prefill(Trie& trie, const WorkloadConfig& cfg);

/// Spawns cfg.threads workers over one shared trie, counts completed
/// operations during the timed window only, and aggregates.
TrialResult run_trial(Trie& trie, const WorkloadConfig& cfg, uint32_t trial_index);

struct CsvRow {
  uint32_t threads = 0;
  uint64_t range = 0;
  std::string mix;
  uint32_t trial = 0;
  uint64_t ops = 0;
  double secs = 0.0;
  double throughput = 0.0;

  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

/// Header `threads,range,mix,trial,ops,secs,throughput` plus one row per
/// trial. Doubles are printed with round-trip precision.
void emit_csv(std::ostream& out, const std::vector<CsvRow>& rows);
std::vector<CsvRow> parse_csv(std::istream& in);

}  // namespace patricia::bench
