#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rmmt/block.hpp"

namespace rmmt {

// Flat bit-packed parentheses sequence. This is the ingest/interchange
// representation and the reference mirror in tests; the tree is built from
// it. Same bit convention as blocks: LSB-first, 1 = open.
class ParenSeq {
 public:
  ParenSeq() = default;

  std::uint64_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  bool open_at(std::uint64_t i) const {
    assert(i < size_);
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void push_back(bool open) {
    if ((size_ & 63) == 0) words_.push_back(0);
    if (open) words_[size_ >> 6] |= std::uint64_t(1) << (size_ & 63);
    ++size_;
  }

  void insert(std::uint64_t pos, bool open) {
    assert(pos <= size_);
    if ((size_ & 63) == 0) words_.push_back(0);
    std::uint64_t wi = pos >> 6;
    for (std::uint64_t k = size_ >> 6; k > wi; --k)
      words_[k] = (words_[k] << 1) | (words_[k - 1] >> 63);
    std::uint64_t bi = pos & 63;
    std::uint64_t low_mask = bi ? ((std::uint64_t(1) << bi) - 1) : 0;
    std::uint64_t low = words_[wi] & low_mask;
    std::uint64_t high = words_[wi] & ~low_mask;
    words_[wi] = low | (high << 1) | (std::uint64_t(open) << bi);
    ++size_;
  }

  void erase(std::uint64_t pos) {
    assert(pos < size_);
    std::uint64_t wi = pos >> 6, bi = pos & 63;
    std::uint64_t low_mask = bi ? ((std::uint64_t(1) << bi) - 1) : 0;
    words_[wi] = (words_[wi] & low_mask) | ((words_[wi] >> 1) & ~low_mask);
    std::uint64_t last = (size_ - 1) >> 6;
    for (std::uint64_t k = wi + 1; k <= last; ++k) {
      words_[k - 1] |= (words_[k] & 1) << 63;
      words_[k] >>= 1;
    }
    --size_;
    if ((size_ & 63) == 0 && !words_.empty()) words_.pop_back();
  }

  const std::uint64_t* words() const { return words_.data(); }

  static ParenSeq from_string(std::string_view s) {
    ParenSeq q;
    for (char c : s) q.push_back(c == '(');
    return q;
  }

  std::string to_string() const {
    std::string s;
    s.reserve(size_);
    for (std::uint64_t i = 0; i < size_; ++i) s += open_at(i) ? '(' : ')';
    return s;
  }

  // Balanced forest: running excess never negative and zero at the end.
  bool is_balanced() const {
    std::int64_t run = 0;
    for (std::uint64_t i = 0; i < size_; ++i) {
      run += open_at(i) ? 1 : -1;
      if (run < 0) return false;
    }
    return run == 0;
  }

  friend bool operator==(const ParenSeq& a, const ParenSeq& b) {
    if (a.size_ != b.size_) return false;
    for (std::uint64_t i = 0; i < a.size_; ++i)
      if (a.open_at(i) != b.open_at(i)) return false;
    return true;
  }

 private:
  std::vector<std::uint64_t> words_;
  std::uint64_t size_ = 0;
};

}  // namespace rmmt
