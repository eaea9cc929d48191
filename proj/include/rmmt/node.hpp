#pragma once

#include <array>
#include <atomic>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <vector>

#include "rmmt/block.hpp"
#include "rmmt/error.hpp"
#include "rmmt/summary.hpp"

namespace rmmt {

using NodeRef = std::uint64_t;
inline constexpr NodeRef kNullRef = ~std::uint64_t(0);

// Fan-out is fixed so a node fills one 64-byte cache line: 5 slots of 8 bytes
// shared between child refs (internal) and 320 packed parentheses (leaf),
// plus the 20-byte summary and a 4-byte discriminator.
inline constexpr std::uint32_t kArity = 5;
inline constexpr std::uint32_t kMinChildren = 3;  // ceil(kArity / 2)

struct alignas(64) Node {
  std::uint32_t meta = 1;  // bit 0: leaf flag; bits 1..4: child count
  NodeSummary summary{};
  std::array<std::uint64_t, kArity> slots{};

  bool is_leaf() const { return meta & 1u; }
  std::uint32_t child_count() const { return meta >> 1; }
  void set_child_count(std::uint32_t n) {
    assert(n <= kArity);
    meta = n << 1;
  }
  std::uint32_t leaf_size() const { return summary.num_parens; }

  void init_leaf() {
    meta = 1;
    summary = {};
    slots.fill(0);
  }
  void init_internal() {
    meta = 0;
    summary = {};
    slots.fill(kNullRef);
  }

  NodeRef child(std::uint32_t i) const {
    assert(!is_leaf() && i < child_count());
    return slots[i];
  }
  void set_child(std::uint32_t i, NodeRef r) {
    assert(!is_leaf());
    slots[i] = r;
  }

  std::uint64_t* bits() {
    assert(is_leaf());
    return slots.data();
  }
  const std::uint64_t* bits() const {
    assert(is_leaf());
    return slots.data();
  }
};

static_assert(sizeof(Node) == 64, "node must fill exactly one cache line");
static_assert(alignof(Node) == 64);

// Shared storage cell. Speculative readers and committers move whole nodes
// through the word view with std::atomic_ref so that a torn snapshot can be
// detected by the version re-check; direct (lock-held or single-threaded)
// access uses the struct view.
union NodeSlot {
  Node node;
  std::array<std::uint64_t, 8> words;
  NodeSlot() : node() {}
};

static_assert(sizeof(NodeSlot) == 64);

// Tunables fixed at tree construction. leaf_cap is runtime-configurable so
// tests can force tiny leaves; the default uses the full five words.
struct TreeParams {
  std::uint32_t leaf_cap = kLeafCapBits;

  std::uint32_t leaf_min() const { return leaf_cap / 2; }

  void check() const {
    if (leaf_cap < 2 || leaf_cap > kLeafCapBits)
      fail(Errc::config_error, "leaf capacity must be in [2, 320]");
  }
};

// Root pointer and height. Kept outside the node pool; txn commits publish
// root/height through atomic_refs guarded by the same version protocol as
// nodes, using ver as the stamp word.
struct VersionedHeader {
  std::atomic<std::uint64_t> ver{0};
  std::uint64_t root = kNullRef;
  std::uint64_t height = 0;
};

// Chunked node pool. Chunks are never unmapped while the store lives and a
// slot's version stamp survives free/realloc and only ever grows, so stale
// speculative readers are always detected and there is no ABA on refs.
class NodeStore {
 public:
  static constexpr std::uint32_t kChunkShift = 13;
  static constexpr std::uint32_t kChunkSize = 1u << kChunkShift;  // nodes per chunk
  static constexpr std::uint32_t kMaxChunks = 1u << 15;

  NodeStore() = default;
  NodeStore(const NodeStore&) = delete;
  NodeStore& operator=(const NodeStore&) = delete;

  ~NodeStore() {
    for (auto& c : dir_) {
      Chunk* p = c.load(std::memory_order_relaxed);
      delete p;
    }
  }

  // Hands out a slot without touching its payload: a recycled slot may still
  // be under snapshot by a stale speculative reader, so (re)initialization is
  // the caller's job and must go through its context's write path.
  NodeRef alloc() {
    std::lock_guard<std::mutex> g(mu_);
    if (!free_.empty()) {
      NodeRef r = free_.back();
      free_.pop_back();
      ++live_;
      return r;
    }
    if (bump_ == std::uint64_t(chunk_count_) * kChunkSize) {
      if (chunk_count_ == kMaxChunks) fail(Errc::config_error, "node pool exhausted");
      dir_[chunk_count_].store(new Chunk(), std::memory_order_release);
      ++chunk_count_;
    }
    NodeRef r = bump_++;
    ++live_;
    return r;
  }

  void free_node(NodeRef r) {
    std::lock_guard<std::mutex> g(mu_);
    free_.push_back(r);
    --live_;
  }

  Node& node(NodeRef r) { return slot(r).node; }
  const Node& node(NodeRef r) const { return slot(r).node; }
  std::uint64_t* raw_words(NodeRef r) { return slot(r).words.data(); }

  std::atomic<std::uint64_t>& version(NodeRef r) {
    Chunk* c = dir_[r >> kChunkShift].load(std::memory_order_acquire);
    return c->versions[r & (kChunkSize - 1)];
  }

  std::uint64_t live_nodes() const {
    std::lock_guard<std::mutex> g(mu_);
    return live_;
  }

  bool valid_ref(NodeRef r) const {
    std::lock_guard<std::mutex> g(mu_);
    return r < bump_;
  }

 private:
  struct Chunk {
    std::array<NodeSlot, kChunkSize> slots{};
    std::array<std::atomic<std::uint64_t>, kChunkSize> versions{};
  };

  NodeSlot& slot(NodeRef r) {
    Chunk* c = dir_[r >> kChunkShift].load(std::memory_order_acquire);
    assert(c != nullptr);
    return c->slots[r & (kChunkSize - 1)];
  }
  const NodeSlot& slot(NodeRef r) const {
    const Chunk* c = dir_[r >> kChunkShift].load(std::memory_order_acquire);
    assert(c != nullptr);
    return c->slots[r & (kChunkSize - 1)];
  }
  std::array<std::atomic<Chunk*>, kMaxChunks> dir_{};
  mutable std::mutex mu_;
  std::vector<NodeRef> free_;
  std::uint64_t bump_ = 0;
  std::uint64_t live_ = 0;
  std::uint32_t chunk_count_ = 0;
};

}  // namespace rmmt
