#pragma once

// Linear-scan reference implementations over plain '(' / ')' strings.
// Deliberately naive and independent of the tree code paths: every value the
// index produces is checked against these.

#include <cassert>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rmmt/summary.hpp"

namespace oracle {

inline std::int64_t excess(const std::string& s, std::int64_t i) {
  std::int64_t e = 0;
  for (std::int64_t k = 0; k <= i; ++k) e += s[std::size_t(k)] == '(' ? 1 : -1;
  return e;
}

inline bool balanced(const std::string& s) {
  std::int64_t e = 0;
  for (char c : s) {
    e += c == '(' ? 1 : -1;
    if (e < 0) return false;
  }
  return e == 0;
}

inline rmmt::NodeSummary summarize(const std::string& s) {
  if (s.empty()) return {};
  std::int64_t run = 0, mn = 1 << 30, mx = -(1 << 30);
  std::uint32_t cnt = 0;
  for (char c : s) {
    run += c == '(' ? 1 : -1;
    if (run < mn) {
      mn = run;
      cnt = 1;
    } else if (run == mn) {
      ++cnt;
    }
    if (run > mx) mx = run;
  }
  return {std::int32_t(run), std::int32_t(mn), std::int32_t(mx), cnt,
          std::uint32_t(s.size())};
}

inline std::optional<std::int64_t> fwd_search(const std::string& s, std::int64_t i,
                                              std::int64_t d) {
  std::int64_t target = excess(s, i) + d;
  std::int64_t run = excess(s, i);
  for (std::int64_t j = i + 1; j < std::int64_t(s.size()); ++j) {
    run += s[std::size_t(j)] == '(' ? 1 : -1;
    if (run == target) return j;
  }
  return std::nullopt;
}

// -1 encodes the virtual left edge (excess 0 before position 0).
inline std::optional<std::int64_t> bwd_search(const std::string& s, std::int64_t i,
                                              std::int64_t d) {
  std::int64_t target = excess(s, i) + d;
  for (std::int64_t j = i - 1; j >= 0; --j)
    if (excess(s, j) == target) return j;
  if (target == 0) return -1;
  return std::nullopt;
}

inline std::int64_t find_close(const std::string& s, std::int64_t i) {
  assert(s[std::size_t(i)] == '(');
  auto r = fwd_search(s, i, -1);
  assert(r);
  return *r;
}

inline std::int64_t find_open(const std::string& s, std::int64_t i) {
  assert(s[std::size_t(i)] == ')');
  auto r = bwd_search(s, i, 0);
  assert(r);
  return *r + 1;
}

inline std::optional<std::int64_t> enclose(const std::string& s, std::int64_t i) {
  assert(s[std::size_t(i)] == '(');
  if (excess(s, i) == 1) return std::nullopt;
  auto r = bwd_search(s, i, -2);
  assert(r);
  return *r + 1;
}

inline std::int64_t depth(const std::string& s, std::int64_t i) { return excess(s, i); }

inline std::int64_t subtree_size(const std::string& s, std::int64_t i) {
  return (find_close(s, i) - i + 1) / 2;
}

inline std::pair<std::int64_t, std::uint64_t> range_min(const std::string& s, std::int64_t i,
                                                        std::int64_t j) {
  std::int64_t mn = 1ll << 60;
  std::uint64_t cnt = 0;
  for (std::int64_t k = i; k <= j; ++k) {
    std::int64_t e = excess(s, k);
    if (e < mn) {
      mn = e;
      cnt = 1;
    } else if (e == mn) {
      ++cnt;
    }
  }
  return {mn, cnt};
}

inline bool valid_wrap(const std::string& s, std::int64_t i, std::int64_t j) {
  std::int64_t run = 0;
  for (std::int64_t k = i; k < j; ++k) {
    run += s[std::size_t(k)] == '(' ? 1 : -1;
    if (run < 0) return false;
  }
  return run == 0;
}

inline std::string insert_pair(const std::string& s, std::int64_t i, std::int64_t j) {
  std::string t = s;
  t.insert(std::size_t(j), 1, ')');
  t.insert(std::size_t(i), 1, '(');
  return t;
}

inline std::string insert_leaf(const std::string& s, std::int64_t i) {
  return insert_pair(s, i, i);
}

inline std::string delete_pair(const std::string& s, std::int64_t i) {
  std::int64_t j = find_close(s, i);
  std::string t = s;
  t.erase(std::size_t(j), 1);
  t.erase(std::size_t(i), 1);
  return t;
}

// All balanced sequences of exactly `len` symbols (len even; "" for len 0).
inline void all_balanced(std::size_t len, std::string& cur, std::int64_t open,
                         std::vector<std::string>& out) {
  if (cur.size() == len) {
    if (open == 0) out.push_back(cur);
    return;
  }
  if (open < std::int64_t(len - cur.size())) {
    cur.push_back('(');
    all_balanced(len, cur, open + 1, out);
    cur.pop_back();
  }
  if (open > 0) {
    cur.push_back(')');
    all_balanced(len, cur, open - 1, out);
    cur.pop_back();
  }
}

inline std::vector<std::string> all_balanced(std::size_t len) {
  std::vector<std::string> out;
  std::string cur;
  all_balanced(len, cur, 0, out);
  return out;
}

// Random balanced sequence grown by unit-pair insertion at random positions
// (inserting "()" anywhere preserves balance). Not uniform over shapes, but
// rich enough for property tests.
template <class Rng>
std::string random_balanced(std::size_t pairs, Rng& rng) {
  std::string s;
  for (std::size_t k = 0; k < pairs; ++k) {
    std::size_t p = std::uniform_int_distribution<std::size_t>(0, s.size())(rng);
    s.insert(p, "()");
  }
  return s;
}

}  // namespace oracle
