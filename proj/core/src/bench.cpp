#include "patricia/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace patricia::bench {

std::optional<MixRatio> parse_mix(std::string_view s) {
  MixRatio mix;
  int fields[4] = {0, 0, 0, 0};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    std::size_t end = i == 3 ? s.size() : s.find(':', pos);
    if (end == std::string_view::npos) return std::nullopt;
    const std::string part{s.substr(pos, end - pos)};
    if (part.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      fields[i] = std::stoi(part, &used);
      if (used != part.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    pos = end + 1;
  }
  mix.insert_pct = fields[0];
  mix.erase_pct = fields[1];
  mix.replace_pct = fields[2];
  mix.find_pct = fields[3];
  if (!mix.valid()) return std::nullopt;
  return mix;
}

std::string mix_name(const MixRatio& mix) {
  std::ostringstream out;
  out << 'i' << mix.insert_pct << "-d" << mix.erase_pct << "-r" << mix.replace_pct
      << "-f" << mix.find_pct;
  return out.str();
}

std::string WorkloadConfig::validate() const {
  if (!mix.valid()) return "mix percentages must be non-negative and sum to 100";
  if (threads == 0) return "threads must be positive";
  if (key_bits < 2 || key_bits > kMaxKeyWidth) return "key-bits must be in [2, 64]";
  if (range < 3) return "range must be at least 3";
  if (key_bits < kMaxKeyWidth && range - 1 >= ((uint64_t{1} << key_bits) - 1))
    return "key range does not fit in key width (top key collides with a sentinel)";
  if (secs <= 0) return "secs must be positive";
  if (trials == 0) return "trials must be positive";
  if (mix.replace_pct > 0 && range < 4) return "replace needs a range of at least 4";
  return "";
}

Summary summarize(const std::vector<TrialResult>& trials) {
  Summary s;
  if (trials.empty()) return s;
  double sum = 0;
  for (const TrialResult& t : trials) sum += t.throughput();
  s.mean = sum / static_cast<double>(trials.size());
  if (trials.size() >= 2) {
    double sq = 0;
    for (const TrialResult& t : trials) {
      const double d = t.throughput() - s.mean;
      sq += d * d;
    }
    s.stddev = std::sqrt(sq / static_cast<double>(trials.size() - 1));
  }
  return s;
}

OpGen::OpGen(uint64_t seed, const MixRatio& mix, uint64_t range, uint32_t run_length)
    : state_(seed ^ 0x2545f4914f6cdd1dULL), mix_(mix), range_(range),
      run_length_(run_length) {}

uint64_t OpGen::rand64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

uint64_t OpGen::next_key() {
  if (run_length_ == 0) return 1 + rand64() % (range_ - 1);
  if (run_left_ == 0) {
    run_left_ = run_length_;
    run_key_ = 1 + rand64() % (range_ - 1);
  }
  --run_left_;
  const uint64_t k = run_key_;
  run_key_ = run_key_ + 1 < range_ ? run_key_ + 1 : 1;
  return k;
}

OpGen::Op OpGen::next() {
  const int roll = static_cast<int>(rand64() % 100);
  int kind;
  if (roll < mix_.insert_pct)
    kind = 0;
  else if (roll < mix_.insert_pct + mix_.erase_pct)
    kind = 1;
  else if (roll < mix_.insert_pct + mix_.erase_pct + mix_.replace_pct)
    kind = 2;
  else
    kind = 3;

  Op op{kind, next_key(), 0};
  if (kind == 2) {
    do {
      op.a1 = 1 + rand64() % (range_ - 1);
    } while (op.a1 == op.a0);
  }
  return op;
}

void prefill(Trie& trie, const WorkloadConfig& cfg) {
  if (!cfg.prefill) return;
  OpGen gen(cfg.seed, MixRatio{50, 50, 0, 0}, cfg.range, 0);
  for (uint64_t i = 0; i < cfg.range; ++i) {
    const OpGen::Op op = gen.next();
    if (op.kind == 0)
      trie.insert(op.a0);
    else
      trie.erase(op.a0);
  }
}

TrialResult run_trial(Trie& trie, const WorkloadConfig& cfg, uint32_t trial_index) {
  // phase: 0 warmup, 1 measured window, 2 stop
  std::atomic<int> phase{cfg.warmup_secs > 0 ? 0 : 1};
  std::atomic<bool> started{false};
  std::vector<std::array<uint64_t, 4>> counts(cfg.threads, {0, 0, 0, 0});

  auto worker = [&](uint32_t tid) {
    OpGen gen(cfg.seed * 1315423911ULL + trial_index * 2654435761ULL + tid,
              cfg.mix, cfg.range, cfg.run_length);
    while (!started.load()) {
    }
    auto& local = counts[tid];
    while (true) {
      const int ph = phase.load();
      if (ph == 2) break;
      const OpGen::Op op = gen.next();
      switch (op.kind) {
        case 0: trie.insert(op.a0); break;
        case 1: trie.erase(op.a0); break;
        case 2: trie.replace(op.a0, op.a1); break;
        default: trie.contains(op.a0); break;
      }
      if (ph == 1) ++local[static_cast<std::size_t>(op.kind)];
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(cfg.threads);
  for (uint32_t t = 0; t < cfg.threads; ++t) threads.emplace_back(worker, t);

  started.store(true);
  if (cfg.warmup_secs > 0) {
    std::this_thread::sleep_for(std::chrono::duration<double>(cfg.warmup_secs));
    phase.store(1);
  }
  const auto window_start = std::chrono::steady_clock::now();
  std::this_thread::sleep_for(std::chrono::duration<double>(cfg.secs));
  phase.store(2);
  const auto window_end = std::chrono::steady_clock::now();
  for (auto& t : threads) t.join();

  TrialResult result;
  result.elapsed = std::chrono::duration<double>(window_end - window_start).count();
  for (const auto& local : counts)
    for (int k = 0; k < 4; ++k) result.ops[static_cast<std::size_t>(k)] += local[static_cast<std::size_t>(k)];
  return result;
}

void emit_csv(std::ostream& out, const std::vector<CsvRow>& rows) {
  out << "threads,range,mix,trial,ops,secs,throughput\n";
  char buf[64];
  for (const CsvRow& r : rows) {
    out << r.threads << ',' << r.range << ',' << r.mix << ',' << r.trial << ','
        << r.ops << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.secs);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.throughput);
    out << buf << '\n';
  }
}

std::vector<CsvRow> parse_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string line;
  if (!std::getline(in, line)) return rows;
  if (line != "threads,range,mix,trial,ops,secs,throughput")
    throw std::invalid_argument("unexpected csv header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    if (fields.size() != 7) throw std::invalid_argument("bad csv row: " + line);
    CsvRow r;
    r.threads = static_cast<uint32_t>(std::stoul(fields[0]));
    r.range = std::stoull(fields[1]);
    r.mix = fields[2];
    r.trial = static_cast<uint32_t>(std::stoul(fields[3]));
    r.ops = std::stoull(fields[4]);
    r.secs = std::stod(fields[5]);
    r.throughput = std::stod(fields[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace patricia::bench
