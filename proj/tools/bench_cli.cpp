// Benchmark driver: prefilled trie, timed mixed workloads, throughput
// reporting with per-trial CSV output and an end-of-trial invariant audit.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "patricia/audit.hpp"
#include "patricia/bench.hpp"
#include "patricia/trie.hpp"

int main(int argc, char** argv) {
  using namespace patricia;

  bench::WorkloadConfig cfg;
  std::string mix_text = "5:5:0:90";
  std::string prefill_text = "on";
  std::string csv_path;

  CLI::App app{"Concurrent Patricia trie set benchmark"};
  app.add_option("--threads", cfg.threads, "Worker thread count")->capture_default_str();
  app.add_option("--secs", cfg.secs, "Seconds per timed trial")->capture_default_str();
  app.add_option("--key-bits", cfg.key_bits, "Key width in bits")->capture_default_str();
  app.add_option("--range", cfg.range, "Keys drawn from [1, range)")->capture_default_str();
  app.add_option("--mix", mix_text, "Operation mix insert:delete:replace:find, e.g. 5:5:0:90")
      ->capture_default_str();
  app.add_option("--trials", cfg.trials, "Number of timed trials")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Base PRNG seed")->capture_default_str();
  app.add_option("--runs", cfg.run_length,
                 "Run length for consecutive-key generation (0 = uniform)")
      ->capture_default_str();
  app.add_option("--warmup", cfg.warmup_secs, "Warmup seconds before each timed window")
      ->capture_default_str();
  app.add_option("--csv", csv_path, "Write per-trial results to this CSV file");
  app.add_option("--prefill", prefill_text, "Prefill the trie to half-full: on|off")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  if (prefill_text == "on") {
    cfg.prefill = true;
  } else if (prefill_text == "off") {
    cfg.prefill = false;
  } else {
    std::cerr << "error: --prefill takes on|off\n";
    return 2;
  }
  if (auto mix = bench::parse_mix(mix_text)) {
    cfg.mix = *mix;
  } else {
    std::cerr << "error: bad --mix '" << mix_text << "' (want i:d:r:f summing to 100)\n";
    return 2;
  }
  if (const std::string err = cfg.validate(); !err.empty()) {
    std::cerr << "error: " << err << "\n";
    return 2;
  }

  Trie trie(cfg.key_bits);
  bench::prefill(trie, cfg);
  {
    const harness::AuditReport audit = harness::quiescent_audit(trie);
    if (!audit.ok) {
      std::cerr << "invariant audit failed after prefill:\n";
      for (const auto& v : audit.violations) std::cerr << "  " << v << "\n";
      std::cerr << audit.dump;
      return 1;
    }
    std::printf("prefill: %zu keys in [1, %llu)\n", audit.keys.size(),
                static_cast<unsigned long long>(cfg.range));
  }

  std::vector<bench::TrialResult> trials;
  std::vector<bench::CsvRow> rows;
  const std::string mix = bench::mix_name(cfg.mix);
  std::printf("threads=%u range=%llu mix=%s secs=%.2f trials=%u seed=%llu%s\n",
              cfg.threads, static_cast<unsigned long long>(cfg.range), mix.c_str(),
              cfg.secs, cfg.trials, static_cast<unsigned long long>(cfg.seed),
              cfg.run_length ? (" runs=" + std::to_string(cfg.run_length)).c_str() : "");

  for (uint32_t t = 0; t < cfg.trials; ++t) {
    const bench::TrialResult res = bench::run_trial(trie, cfg, t);
    trie.domain().collect();
    const harness::AuditReport audit = harness::quiescent_audit(trie);
    if (!audit.ok) {
      std::cerr << "invariant audit failed after trial " << t << ":\n";
      for (const auto& v : audit.violations) std::cerr << "  " << v << "\n";
      std::cerr << audit.dump;
      return 1;
    }
    std::printf(
        "trial %2u: %9llu ops in %.3fs = %12.0f ops/s  (i=%llu d=%llu r=%llu f=%llu)\n",
        t, static_cast<unsigned long long>(res.total()), res.elapsed, res.throughput(),
        static_cast<unsigned long long>(res.ops[0]),
        static_cast<unsigned long long>(res.ops[1]),
        static_cast<unsigned long long>(res.ops[2]),
        static_cast<unsigned long long>(res.ops[3]));
    rows.push_back({cfg.threads, cfg.range, mix, t, res.total(), res.elapsed,
                    res.throughput()});
    trials.push_back(res);
  }

  const bench::Summary s = bench::summarize(trials);
  if (trials.size() >= 2)
    std::printf("mean %.0f ops/s, stddev %.0f over %zu trials\n", s.mean, s.stddev,
                trials.size());
  else
    std::printf("mean %.0f ops/s over 1 trial\n", s.mean);

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) {
      std::cerr << "error: cannot write " << csv_path << "\n";
      return 1;
    }
    bench::emit_csv(out, rows);
    if (!out.good()) {
      std::cerr << "error: failed writing " << csv_path << "\n";
      return 1;
    }
  }
  return 0;
}
