#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "oracle.hpp"
#include "rmmt/block.hpp"
#include "rmmt/paren_seq.hpp"
#include "rmmt/summary.hpp"

using namespace rmmt;

namespace {

std::string random_parens(std::size_t n, std::mt19937_64& rng) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (rng() & 1) ? '(' : ')';
  return s;
}

}  // namespace

TEST_CASE("summary of known runs") {
  CHECK(summarize_block(ParenBlock::from_string("(()(")) == NodeSummary{2, 1, 2, 2, 4});
  CHECK(summarize_block(ParenBlock::from_string("))")) == NodeSummary{-2, -2, -1, 1, 2});
  CHECK(summarize_block(ParenBlock::from_string("(()())")) == NodeSummary{0, 0, 2, 1, 6});
  CHECK(summarize_block(ParenBlock::from_string("")) == NodeSummary{});
  CHECK(summarize_block(ParenBlock::from_string("(")) == NodeSummary::open_paren());
  CHECK(summarize_block(ParenBlock::from_string(")")) == NodeSummary::close_paren());
}

TEST_CASE("combine matches concatenation") {
  CHECK(combine({2, 1, 2, 2, 4}, {-2, -2, -1, 1, 2}) == NodeSummary{0, 0, 2, 1, 6});
  // identity
  NodeSummary s{2, 1, 2, 2, 4};
  CHECK(combine(s, NodeSummary{}) == s);
  CHECK(combine(NodeSummary{}, s) == s);

  std::mt19937_64 rng(7);
  for (int it = 0; it < 2000; ++it) {
    std::string a = random_parens(rng() % 40, rng);
    std::string b = random_parens(rng() % 40, rng);
    CHECK(combine(oracle::summarize(a), oracle::summarize(b)) == oracle::summarize(a + b));
  }
}

TEST_CASE("combine is associative") {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 2000; ++it) {
    NodeSummary a = oracle::summarize(random_parens(rng() % 20, rng));
    NodeSummary b = oracle::summarize(random_parens(rng() % 20, rng));
    NodeSummary c = oracle::summarize(random_parens(rng() % 20, rng));
    CHECK(combine(combine(a, b), c) == combine(a, combine(b, c)));
  }
}

TEST_CASE("summarize matches scan oracle on all short blocks") {
  for (std::size_t len = 0; len <= 14; ++len) {
    // enumerate every bit pattern of this length
    for (std::uint64_t bits = 0; bits < (std::uint64_t(1) << len); ++bits) {
      std::string s;
      for (std::size_t i = 0; i < len; ++i) s += (bits >> i) & 1 ? '(' : ')';
      ParenBlock b = ParenBlock::from_string(s);
      CHECK(summarize_block(b) == oracle::summarize(s));
    }
  }
}

TEST_CASE("summarize matches scan oracle on random full-width blocks") {
  std::mt19937_64 rng(13);
  for (int it = 0; it < 3000; ++it) {
    std::string s = random_parens(1 + rng() % kLeafCapBits, rng);
    CHECK(summarize_block(ParenBlock::from_string(s)) == oracle::summarize(s));
  }
}

TEST_CASE("summarize_bits_range agrees with substring summaries") {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 1500; ++it) {
    std::string s = random_parens(1 + rng() % kLeafCapBits, rng);
    ParenBlock b = ParenBlock::from_string(s);
    std::uint32_t lo = rng() % b.size;
    std::uint32_t hi = lo + rng() % (b.size - lo);
    CHECK(summarize_bits_range(b.words.data(), lo, hi) ==
          oracle::summarize(s.substr(lo, hi - lo + 1)));
  }
}

TEST_CASE("fwd_search_block pinned examples") {
  // Local prefixes of "(())" are 1,2,1,0; the target is the excess before
  // start (here 1) plus delta, so the first hit at or after 1 is j = 3.
  ParenBlock b = ParenBlock::from_string("(())");
  auto r = fwd_search_block(b, 1, -1);
  REQUIRE(r.has_value());
  CHECK(*r == 3);
  CHECK(!fwd_search_block(b, 0, 5).has_value());
  CHECK(!fwd_search_block(b, 4, 0).has_value());  // start at length scans nothing
}

TEST_CASE("bwd_search_block pinned examples") {
  ParenBlock b1 = ParenBlock::from_string("(()");
  auto r1 = bwd_search_block(b1, 2, 0);
  REQUIRE(r1.has_value());
  CHECK(*r1 == 0);

  ParenBlock b2 = ParenBlock::from_string("()");
  auto r2 = bwd_search_block(b2, 1, 0);
  REQUIRE(r2.has_value());
  CHECK(*r2 == -1);  // virtual left edge

  ParenBlock b3 = ParenBlock::from_string("(");
  CHECK(!bwd_search_block(b3, 0, -5).has_value());
}

TEST_CASE("block searches agree with per-position scan, exhaustive") {
  for (std::size_t len = 1; len <= 12; ++len) {
    for (std::uint64_t bits = 0; bits < (std::uint64_t(1) << len); ++bits) {
      std::string s;
      for (std::size_t i = 0; i < len; ++i) s += (bits >> i) & 1 ? '(' : ')';
      ParenBlock b = ParenBlock::from_string(s);
      for (std::uint32_t start = 0; start < len; ++start) {
        for (std::int32_t d = -3; d <= 3; ++d) {
          // forward: target relative to the prefix before start
          std::int32_t base = start ? std::int32_t(oracle::excess(s, start - 1)) : 0;
          std::optional<std::uint32_t> want_f;
          for (std::uint32_t j = start; j < len; ++j)
            if (oracle::excess(s, j) == base + d) {
              want_f = j;
              break;
            }
          CHECK(fwd_search_block(b, start, d) == want_f);

          // backward: target relative to the prefix at start
          std::int32_t tgt = std::int32_t(oracle::excess(s, start)) + d;
          std::optional<std::int32_t> want_b;
          for (std::int32_t j = std::int32_t(start) - 1; j >= 0; --j)
            if (oracle::excess(s, j) == tgt) {
              want_b = j;
              break;
            }
          if (!want_b && tgt == 0) want_b = -1;
          CHECK(bwd_search_block(b, start, d) == want_b);
        }
      }
    }
  }
}

TEST_CASE("block searches agree with per-position scan, random full-width") {
  std::mt19937_64 rng(23);
  for (int it = 0; it < 10000; ++it) {
    std::uint32_t len = 1 + rng() % kLeafCapBits;
    std::string s = random_parens(len, rng);
    ParenBlock b = ParenBlock::from_string(s);
    std::uint32_t start = rng() % len;
    std::int32_t d = std::int32_t(rng() % 21) - 10;

    std::int32_t base = start ? std::int32_t(oracle::excess(s, start - 1)) : 0;
    std::optional<std::uint32_t> want_f;
    for (std::uint32_t j = start; j < len; ++j)
      if (oracle::excess(s, j) == base + d) {
        want_f = j;
        break;
      }
    CHECK(fwd_search_block(b, start, d) == want_f);

    std::int32_t tgt = std::int32_t(oracle::excess(s, start)) + d;
    std::optional<std::int32_t> want_b;
    for (std::int32_t j = std::int32_t(start) - 1; j >= 0; --j)
      if (oracle::excess(s, j) == tgt) {
        want_b = j;
        break;
      }
    if (!want_b && tgt == 0) want_b = -1;
    CHECK(bwd_search_block(b, start, d) == want_b);
  }
}

TEST_CASE("bit insertion and erasure against a vector model") {
  std::mt19937_64 rng(29);
  for (int it = 0; it < 4000; ++it) {
    std::uint32_t len = rng() % kLeafCapBits;
    std::string s = random_parens(len, rng);
    ParenBlock b = ParenBlock::from_string(s);

    if (len < kLeafCapBits && (rng() & 1)) {
      std::uint32_t pos = rng() % (len + 1);
      bool open = rng() & 1;
      bits_insert(b.words.data(), b.size, pos, open);
      b.size++;
      s.insert(pos, 1, open ? '(' : ')');
    } else if (len > 0) {
      std::uint32_t pos = rng() % len;
      bits_erase(b.words.data(), b.size, pos);
      b.size--;
      s.erase(pos, 1);
    }
    CHECK(b.to_string() == s);
    // padding must stay zero so summaries can trust whole words
    ParenBlock clean = ParenBlock::from_string(s);
    CHECK(clean.words == b.words);
  }
}

TEST_CASE("bits_copy moves arbitrary spans") {
  std::mt19937_64 rng(31);
  for (int it = 0; it < 2000; ++it) {
    std::string src = random_parens(1 + rng() % kLeafCapBits, rng);
    ParenBlock b = ParenBlock::from_string(src);
    std::uint32_t spos = rng() % b.size;
    std::uint32_t n = rng() % (b.size - spos + 1);
    std::array<std::uint64_t, kLeafWords> dst{};
    std::uint32_t dpos = rng() % (kLeafCapBits - n + 1);
    bits_copy(dst.data(), dpos, b.words.data(), spos, n);
    for (std::uint32_t k = 0; k < n; ++k)
      CHECK(bit_get(dst.data(), dpos + k) == (src[spos + k] == '('));
  }
}

TEST_CASE("paren_seq mirrors string edits") {
  std::mt19937_64 rng(37);
  std::string s;
  ParenSeq q;
  for (int it = 0; it < 6000; ++it) {
    if (s.empty() || (rng() % 3) != 0) {
      std::size_t pos = rng() % (s.size() + 1);
      bool open = rng() & 1;
      q.insert(pos, open);
      s.insert(pos, 1, open ? '(' : ')');
    } else {
      std::size_t pos = rng() % s.size();
      q.erase(pos);
      s.erase(pos, 1);
    }
    if (it % 100 == 0) CHECK(q.to_string() == s);
    CHECK(q.size() == s.size());
  }
  CHECK(q.to_string() == s);
  CHECK(ParenSeq::from_string(s) == q);
}
