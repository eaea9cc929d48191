#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmmt/engine.hpp"
#include "rmmt/paren_seq.hpp"

namespace rmmt {

// Post-run consistency check failed (structural damage or stats that do not
// add up). Distinct from Error so callers can exit differently.
struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BenchConfig {
  ConcurrencyMode mode = ConcurrencyMode::speculative;
  unsigned threads = 1;
  double duration_s = 1.0;
  double write_pct = 0.0;  // fraction of operations that mutate, in [0, 1]
  unsigned retries = 2;    // speculative attempts before fallback - 1
  unsigned reps = 1;
  std::uint64_t seed = 1;
  double leaf_fill = 0.75;
  bool validate = true;

  void check() const;
};

// One CSV row. Count columns are doubles so the synthetic mean row can carry
// fractional values; data rows hold exact integers.
struct BenchRecord {
  std::string mode;
  unsigned threads = 0;
  double duration_s = 0;
  double write_pct = 0;
  unsigned retries = 0;
  std::string rep;  // "1".."R" or "mean"
  double ops_total = 0;
  double ops_read = 0;
  double ops_write = 0;
  double fast_commits = 0;
  double fallback_commits = 0;
  double aborts = 0;
  double throughput_ops_s = 0;
};

// Mixed read/write throughput run. Each rep rebuilds a fresh tree from `seq`,
// spawns cfg.threads workers for cfg.duration_s seconds, and collects engine
// counters. Readers pick a uniform position and run one of find_close /
// enclose / depth on the nearest open parenthesis at or after it; writers
// split evenly between inserting a leaf pair at a uniform position and
// deleting the nearest leaf pair. Position resolution happens inside the same
// transaction/lock section as the operation itself.
//
// Returns one record per rep plus a final mean record (rep == "mean").
std::vector<BenchRecord> run_benchmark(const ParenSeq& seq, const BenchConfig& cfg);

extern const char* const kCsvHeader;

void emit_csv(std::ostream& os, const std::vector<BenchRecord>& records);

}  // namespace rmmt
