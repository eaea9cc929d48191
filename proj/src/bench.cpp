#include "rmmt/bench.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>
#include <thread>

#include "rmmt/tree.hpp"
#include "rmmt/tree_ops.hpp"

namespace rmmt {

namespace {

using Clock = std::chrono::steady_clock;

// Busy work between operations so workers do not hammer the tree back to
// back. Each worker re-sizes its spin every window so the filler stays
// around 1% of the measured per-operation cost.
class ThinkTime {
 public:
  void spin() {
    for (std::uint64_t k = 0; k < spins_; ++k) junk_ += k;
  }

  void recalibrate(double op_ns, double ns_per_spin) {
    double want = 0.01 * op_ns / std::max(ns_per_spin, 0.1);
    spins_ = std::uint64_t(std::clamp(want, 1.0, 1e6));
  }

  static double measure_spin_cost() {
    volatile std::uint64_t sink = 0;
    constexpr std::uint64_t kIters = 1 << 18;
    auto t0 = Clock::now();
    for (std::uint64_t k = 0; k < kIters; ++k) sink = sink + k;
    auto t1 = Clock::now();
    return double(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()) / kIters;
  }

 private:
  std::uint64_t spins_ = 16;
  std::uint64_t junk_ = 0;
};

void reader_op(Engine& eng, std::uint64_t r, std::uint64_t& sink) {
  unsigned kind = unsigned(r % 3);
  std::uint64_t acc = 0;
  eng.execute_read([&](auto& c) {
    std::uint64_t n = ops::total_size(c);
    if (n == 0) return;
    std::uint64_t wrap = (r >> 2) % n;
    auto p = ops::first_open_at_or_after(c, wrap);
    if (!p) p = ops::first_open_at_or_after(c, 0);  // nonempty + balanced => position 0 opens
    switch (kind) {
      case 0: acc = ops::find_close(c, *p); break;
      case 1: acc = ops::enclose(c, *p).value_or(n); break;
      default: acc = std::uint64_t(ops::depth(c, *p)); break;
    }
  });
  sink ^= acc;
}

void writer_op(Engine& eng, std::uint64_t r) {
  bool do_insert = (r & 1) != 0;
  eng.execute_write([&](auto& c) {
    std::uint64_t n = ops::total_size(c);
    if (do_insert || n == 0) {
      ops::insert_leaf(c, (r >> 2) % (n + 1));
      return;
    }
    auto p = ops::first_leaf_pair_at_or_after(c, (r >> 2) % n);
    if (!p) p = ops::first_leaf_pair_at_or_after(c, 0);  // a nonempty sequence has one
    ops::delete_pair(c, *p);
  });
}

struct RepCounters {
  TxnStats stats;
  double elapsed_s = 0;
};

RepCounters run_rep(const ParenSeq& seq, const BenchConfig& cfg, unsigned rep_index) {
  Tree tree(seq, cfg.leaf_fill);
  Engine eng(tree, cfg.mode, cfg.retries);

  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> sink_out{0};
  std::barrier start(cfg.threads + 1);
  double ns_per_spin = ThinkTime::measure_spin_cost();

  std::vector<std::thread> workers;
  workers.reserve(cfg.threads);
  for (unsigned w = 0; w < cfg.threads; ++w) {
    workers.emplace_back([&, w] {
      std::mt19937_64 rng(cfg.seed + 0x9E3779B97F4A7C15ULL * (w + 1));
      const std::uint64_t write_cut = std::uint64_t(cfg.write_pct * double(std::uint64_t(1) << 53));
      ThinkTime think;
      std::uint64_t sink = 0;
      std::uint64_t window_ops = 0;
      start.arrive_and_wait();
      auto window_t0 = Clock::now();
      while (!stop.load(std::memory_order_relaxed)) {
        std::uint64_t r = rng();
        if ((r >> 11) < write_cut)
          writer_op(eng, rng());
        else
          reader_op(eng, rng(), sink);
        think.spin();
        if (++window_ops == 1024) {
          auto now = Clock::now();
          double ns =
              double(std::chrono::duration_cast<std::chrono::nanoseconds>(now - window_t0).count());
          think.recalibrate(ns / double(window_ops), ns_per_spin);
          window_ops = 0;
          window_t0 = now;
        }
      }
      sink_out.fetch_xor(sink, std::memory_order_relaxed);
    });
  }

  start.arrive_and_wait();
  auto t0 = Clock::now();
  std::this_thread::sleep_for(std::chrono::duration<double>(cfg.duration_s));
  stop.store(true, std::memory_order_relaxed);
  auto t1 = Clock::now();
  for (auto& t : workers) t.join();

  RepCounters rc;
  rc.stats = eng.stats();
  rc.elapsed_s = std::chrono::duration<double>(t1 - t0).count();

  if (cfg.validate) {
    const TxnStats& s = rc.stats;
    std::uint64_t committed = s.fast_commits + s.fallback_commits;
    if (s.attempts != committed + s.aborts)
      throw ValidationFailure("rep " + std::to_string(rep_index) +
                              ": attempts != commits + aborts");
    if (s.reads_done + s.writes_done != committed)
      throw ValidationFailure("rep " + std::to_string(rep_index) +
                              ": completed ops != commits");
    if (cfg.mode == ConcurrencyMode::rwlock && (s.aborts != 0 || s.fallback_commits != 0))
      throw ValidationFailure("rep " + std::to_string(rep_index) +
                              ": rwlock mode produced aborts or fallbacks");
    ValidationReport rep = tree.validate();
    if (!rep.ok())
      throw ValidationFailure("rep " + std::to_string(rep_index) +
                              ": tree invariants violated:\n" + rep.to_string());
    if (!tree.to_paren_seq().is_balanced())
      throw ValidationFailure("rep " + std::to_string(rep_index) + ": sequence unbalanced");
  }
  return rc;
}

std::string fmt_count(double v) {
  char buf[32];
  if (v == std::floor(v) && std::abs(v) < 1e15)
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  else
    std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void BenchConfig::check() const {
  if (threads < 1) fail(Errc::config_error, "threads must be >= 1");
  if (!(duration_s > 0)) fail(Errc::config_error, "duration must be positive");
  if (!(write_pct >= 0.0 && write_pct <= 1.0))
    fail(Errc::config_error, "write fraction must be in [0, 1]");
  if (retries > 2) fail(Errc::config_error, "retry budget must be 0, 1 or 2");
  if (reps < 1) fail(Errc::config_error, "reps must be >= 1");
  if (!(leaf_fill > 0.0 && leaf_fill <= 1.0))
    fail(Errc::config_error, "leaf fill must be in (0, 1]");
}

std::vector<BenchRecord> run_benchmark(const ParenSeq& seq, const BenchConfig& cfg) {
  cfg.check();
  std::vector<BenchRecord> out;
  BenchRecord mean;
  mean.mode = mode_name(cfg.mode);
  mean.threads = cfg.threads;
  mean.duration_s = cfg.duration_s;
  mean.write_pct = cfg.write_pct;
  mean.retries = cfg.retries;
  mean.rep = "mean";

  for (unsigned rep = 1; rep <= cfg.reps; ++rep) {
    RepCounters rc = run_rep(seq, cfg, rep);
    BenchRecord r = mean;
    r.rep = std::to_string(rep);
    r.ops_total = double(rc.stats.fast_commits + rc.stats.fallback_commits);
    r.ops_read = double(rc.stats.reads_done);
    r.ops_write = double(rc.stats.writes_done);
    r.fast_commits = double(rc.stats.fast_commits);
    r.fallback_commits = double(rc.stats.fallback_commits);
    r.aborts = double(rc.stats.aborts);
    r.throughput_ops_s = rc.elapsed_s > 0 ? r.ops_total / rc.elapsed_s : 0.0;
    mean.ops_total += r.ops_total;
    mean.ops_read += r.ops_read;
    mean.ops_write += r.ops_write;
    mean.fast_commits += r.fast_commits;
    mean.fallback_commits += r.fallback_commits;
    mean.aborts += r.aborts;
    mean.throughput_ops_s += r.throughput_ops_s;
    out.push_back(std::move(r));
  }
  double n = double(cfg.reps);
  mean.ops_total /= n;
  mean.ops_read /= n;
  mean.ops_write /= n;
  mean.fast_commits /= n;
  mean.fallback_commits /= n;
  mean.aborts /= n;
  mean.throughput_ops_s /= n;
  out.push_back(std::move(mean));
  return out;
}

const char* const kCsvHeader =
    "mode,threads,duration_s,write_pct,retries,rep,ops_total,ops_read,ops_write,"
    "fast_commits,fallback_commits,aborts,throughput_ops_s";

void emit_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kCsvHeader << '\n';
  for (const BenchRecord& r : records) {
    char tp[32];
    std::snprintf(tp, sizeof(tp), "%.2f", r.throughput_ops_s);
    os << r.mode << ',' << r.threads << ',' << fmt_g(r.duration_s) << ',' << fmt_g(r.write_pct)
       << ',' << r.retries << ',' << r.rep << ',' << fmt_count(r.ops_total) << ','
       << fmt_count(r.ops_read) << ',' << fmt_count(r.ops_write) << ','
       << fmt_count(r.fast_commits) << ',' << fmt_count(r.fallback_commits) << ','
       << fmt_count(r.aborts) << ',' << tp << '\n';
  }
}

}  // namespace rmmt
