#pragma once

#include <array>
#include <bit>
#include <cassert>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "rmmt/summary.hpp"

namespace rmmt {

// Parentheses are bit-packed LSB-first: bit i of word i/64 holds position i,
// 1 = open '(' and 0 = close ')'. A leaf block spans five 64-bit words.
inline constexpr std::uint32_t kLeafWords = 5;
inline constexpr std::uint32_t kLeafCapBits = kLeafWords * 64;  // 320

inline bool bit_get(const std::uint64_t* w, std::uint32_t i) {
  return (w[i >> 6] >> (i & 63)) & 1u;
}

inline void bit_set(std::uint64_t* w, std::uint32_t i, bool open) {
  std::uint64_t m = std::uint64_t(1) << (i & 63);
  if (open)
    w[i >> 6] |= m;
  else
    w[i >> 6] &= ~m;
}

inline std::uint32_t byte_at(const std::uint64_t* w, std::uint32_t byte_idx) {
  return std::uint32_t(w[byte_idx >> 3] >> ((byte_idx & 7) * 8)) & 0xFFu;
}

// Per-byte excess digest: total excess of the 8 symbols plus min/max over the
// byte-internal inclusive prefix excesses and the multiplicity of the min.
struct ByteExcess {
  std::int8_t total;
  std::int8_t min;
  std::int8_t max;
  std::uint8_t min_count;
};

constexpr std::array<ByteExcess, 256> make_byte_excess_table() {
  std::array<ByteExcess, 256> t{};
  for (unsigned b = 0; b < 256; ++b) {
    int run = 0, mn = 9, mx = -9;
    unsigned cnt = 0;
    for (unsigned i = 0; i < 8; ++i) {
      run += ((b >> i) & 1u) ? 1 : -1;
      if (run < mn) {
        mn = run;
        cnt = 1;
      } else if (run == mn) {
        ++cnt;
      }
      if (run > mx) mx = run;
    }
    t[b] = {std::int8_t(run), std::int8_t(mn), std::int8_t(mx), std::uint8_t(cnt)};
  }
  return t;
}

inline constexpr auto kByteExcess = make_byte_excess_table();

// Excess of positions [0, k), i.e. the inclusive prefix excess of k-1.
inline std::int32_t prefix_excess(const std::uint64_t* w, std::uint32_t k) {
  std::int32_t ones = 0;
  std::uint32_t full = k >> 6;
  for (std::uint32_t i = 0; i < full; ++i) ones += std::popcount(w[i]);
  if (k & 63) ones += std::popcount(w[full] & ((std::uint64_t(1) << (k & 63)) - 1));
  return 2 * ones - std::int32_t(k);
}

inline NodeSummary summarize_bits(const std::uint64_t* w, std::uint32_t n) {
  if (n == 0) return {};
  std::int32_t run = 0;
  std::int32_t mn = std::numeric_limits<std::int32_t>::max();
  std::int32_t mx = std::numeric_limits<std::int32_t>::min();
  std::uint32_t cnt = 0;
  std::uint32_t nbytes = n >> 3;
  for (std::uint32_t b = 0; b < nbytes; ++b) {
    const ByteExcess& e = kByteExcess[byte_at(w, b)];
    std::int32_t m = run + e.min;
    if (m < mn) {
      mn = m;
      cnt = e.min_count;
    } else if (m == mn) {
      cnt += e.min_count;
    }
    if (run + e.max > mx) mx = run + e.max;
    run += e.total;
  }
  for (std::uint32_t i = nbytes << 3; i < n; ++i) {
    run += bit_get(w, i) ? 1 : -1;
    if (run < mn) {
      mn = run;
      cnt = 1;
    } else if (run == mn) {
      ++cnt;
    }
    if (run > mx) mx = run;
  }
  return {run, mn, mx, cnt, n};
}

// Summary of the inclusive sub-range [lo, hi], excesses relative to lo.
// Only used at range boundaries, so the plain bit loop is fine.
inline NodeSummary summarize_bits_range(const std::uint64_t* w, std::uint32_t lo, std::uint32_t hi) {
  assert(lo <= hi);
  std::int32_t run = 0;
  std::int32_t mn = std::numeric_limits<std::int32_t>::max();
  std::int32_t mx = std::numeric_limits<std::int32_t>::min();
  std::uint32_t cnt = 0;
  for (std::uint32_t i = lo; i <= hi; ++i) {
    run += bit_get(w, i) ? 1 : -1;
    if (run < mn) {
      mn = run;
      cnt = 1;
    } else if (run == mn) {
      ++cnt;
    }
    if (run > mx) mx = run;
  }
  return {run, mn, mx, cnt, hi - lo + 1};
}

// Smallest j in [start, n) whose inclusive prefix excess equals target.
// Whole bytes are skipped via the digest table; because excess moves in +-1
// steps, a byte whose [min,max] straddles target must contain a hit.
inline std::optional<std::uint32_t> find_prefix_fwd(const std::uint64_t* w, std::uint32_t n,
                                                    std::uint32_t start, std::int32_t target) {
  if (start >= n) return std::nullopt;
  std::int32_t run = prefix_excess(w, start);
  std::uint32_t i = start;
  while (i < n && (i & 7)) {
    run += bit_get(w, i) ? 1 : -1;
    if (run == target) return i;
    ++i;
  }
  while (i + 8 <= n) {
    const ByteExcess& e = kByteExcess[byte_at(w, i >> 3)];
    if (target >= run + e.min && target <= run + e.max) break;
    run += e.total;
    i += 8;
  }
  while (i < n) {
    run += bit_get(w, i) ? 1 : -1;
    if (run == target) return i;
    ++i;
  }
  return std::nullopt;
}

// Largest j in [0, end) whose inclusive prefix excess equals target.
inline std::optional<std::uint32_t> find_prefix_bwd(const std::uint64_t* w, std::uint32_t end,
                                                    std::int32_t target) {
  if (end == 0) return std::nullopt;
  std::int32_t run = prefix_excess(w, end);  // inclusive prefix of end-1
  std::uint32_t i = end;
  while (i > 0 && (i & 7)) {
    if (run == target) return i - 1;
    run -= bit_get(w, i - 1) ? 1 : -1;
    --i;
  }
  while (i >= 8) {
    const ByteExcess& e = kByteExcess[byte_at(w, (i >> 3) - 1)];
    std::int32_t before = run - e.total;
    if (target >= before + e.min && target <= before + e.max) {
      for (unsigned k = 0; k < 8; ++k) {
        if (run == target) return i - 1;
        run -= bit_get(w, i - 1) ? 1 : -1;
        --i;
      }
      assert(false && "digest promised a hit inside this byte");
    }
    run = before;
    i -= 8;
  }
  while (i > 0) {
    if (run == target) return i - 1;
    run -= bit_get(w, i - 1) ? 1 : -1;
    --i;
  }
  return std::nullopt;
}

// Insert one symbol at pos, shifting [pos, size) up. Caller guarantees
// size+1 fits the backing words and that padding bits above size are zero;
// both properties are preserved.
inline void bits_insert(std::uint64_t* w, std::uint32_t size, std::uint32_t pos, bool open) {
  assert(pos <= size);
  std::uint32_t wi = pos >> 6, bi = pos & 63;
  for (std::uint32_t k = size >> 6; k > wi; --k) w[k] = (w[k] << 1) | (w[k - 1] >> 63);
  std::uint64_t low_mask = bi ? ((std::uint64_t(1) << bi) - 1) : 0;
  std::uint64_t low = w[wi] & low_mask;
  std::uint64_t high = w[wi] & ~low_mask;
  w[wi] = low | (high << 1) | (std::uint64_t(open) << bi);
}

// Erase the symbol at pos, shifting (pos, size) down. Keeps padding zero.
inline void bits_erase(std::uint64_t* w, std::uint32_t size, std::uint32_t pos) {
  assert(pos < size);
  std::uint32_t wi = pos >> 6, bi = pos & 63;
  std::uint64_t low_mask = bi ? ((std::uint64_t(1) << bi) - 1) : 0;
  w[wi] = (w[wi] & low_mask) | ((w[wi] >> 1) & ~low_mask);
  std::uint32_t last = (size - 1) >> 6;
  for (std::uint32_t k = wi + 1; k <= last; ++k) {
    w[k - 1] |= (w[k] & 1) << 63;
    w[k] >>= 1;
  }
}

// Bit-granular copy between non-overlapping buffers. Rebalancing moves at
// most a few hundred bits, so the simple loop is plenty.
inline void bits_copy(std::uint64_t* dst, std::uint32_t dpos, const std::uint64_t* src,
                      std::uint32_t spos, std::uint32_t n) {
  for (std::uint32_t k = 0; k < n; ++k) bit_set(dst, dpos + k, bit_get(src, spos + k));
}

inline void bits_clear_from(std::uint64_t* w, std::uint32_t nwords, std::uint32_t size) {
  std::uint32_t wi = size >> 6, bi = size & 63;
  if (wi >= nwords) return;
  if (bi) {
    w[wi] &= (std::uint64_t(1) << bi) - 1;
    ++wi;
  }
  for (; wi < nwords; ++wi) w[wi] = 0;
}

// A standalone leaf-sized block; mainly glue for tests and the kernel-level
// search entry points.
struct ParenBlock {
  std::array<std::uint64_t, kLeafWords> words{};
  std::uint32_t size = 0;

  bool open_at(std::uint32_t i) const {
    assert(i < size);
    return bit_get(words.data(), i);
  }

  void push_back(bool open) {
    assert(size < kLeafCapBits);
    bit_set(words.data(), size++, open);
  }

  static ParenBlock from_string(std::string_view s) {
    ParenBlock b;
    for (char c : s) b.push_back(c == '(');
    return b;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(size);
    for (std::uint32_t i = 0; i < size; ++i) s += open_at(i) ? '(' : ')';
    return s;
  }

  friend bool operator==(const ParenBlock& a, const ParenBlock& b) {
    if (a.size != b.size) return false;
    return a.to_string() == b.to_string();
  }
};

inline NodeSummary summarize_block(const ParenBlock& b) {
  return summarize_bits(b.words.data(), b.size);
}

// Smallest j >= start whose block-local excess equals the excess just before
// start (0 when start is 0) plus delta. nullopt when no such j exists.
inline std::optional<std::uint32_t> fwd_search_block(const ParenBlock& b, std::uint32_t start,
                                                     std::int32_t delta) {
  assert(start <= b.size);
  std::int32_t base = start ? prefix_excess(b.words.data(), start) : 0;
  return find_prefix_fwd(b.words.data(), b.size, start, base + delta);
}

// Largest j < start whose block-local excess equals excess(start) + delta.
// Returns -1 when the virtual left edge (excess 0 before position 0) is the
// match, nullopt when there is none.
inline std::optional<std::int32_t> bwd_search_block(const ParenBlock& b, std::uint32_t start,
                                                    std::int32_t delta) {
  assert(start < b.size);
  std::int32_t target = prefix_excess(b.words.data(), start + 1) + delta;
  if (auto j = find_prefix_bwd(b.words.data(), start, target)) return std::int32_t(*j);
  if (target == 0) return -1;
  return std::nullopt;
}

}  // namespace rmmt
