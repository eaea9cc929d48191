#pragma once

#include <algorithm>
#include <cstdint>

namespace rmmt {

// Aggregate describing a contiguous run of parentheses. Excess values are
// relative to the start of the run: min/max are taken over the inclusive
// prefix excesses of the run, min_count counts how many prefixes attain the
// minimum. The empty run acts as the identity under combine().
struct NodeSummary {
  std::int32_t total_excess = 0;
  std::int32_t min_excess = 0;
  std::int32_t max_excess = 0;
  std::uint32_t min_count = 0;
  std::uint32_t num_parens = 0;

  bool empty() const { return num_parens == 0; }

  static NodeSummary open_paren() { return {+1, +1, +1, 1, 1}; }
  static NodeSummary close_paren() { return {-1, -1, -1, 1, 1}; }

  friend bool operator==(const NodeSummary&, const NodeSummary&) = default;
};

static_assert(sizeof(NodeSummary) == 20, "summary must stay 20 bytes to fit the node budget");

// Concatenation: prefixes of the right run are shifted by the left run's
// total excess. Associative; NodeSummary{} is the identity.
constexpr NodeSummary combine(const NodeSummary& a, const NodeSummary& b) {
  if (a.num_parens == 0) return b;
  if (b.num_parens == 0) return a;
  NodeSummary r;
  r.total_excess = a.total_excess + b.total_excess;
  r.min_excess = std::min(a.min_excess, a.total_excess + b.min_excess);
  r.max_excess = std::max(a.max_excess, a.total_excess + b.max_excess);
  if (a.min_excess < a.total_excess + b.min_excess) {
    r.min_count = a.min_count;
  } else if (a.min_excess > a.total_excess + b.min_excess) {
    r.min_count = b.min_count;
  } else {
    r.min_count = a.min_count + b.min_count;
  }
  r.num_parens = a.num_parens + b.num_parens;
  return r;
}

}  // namespace rmmt
