#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cassert>
#include <cstdint>
#include <cstring>
#include <memory>
#include <mutex>
#include <vector>

#include "rmmt/context.hpp"
#include "rmmt/node.hpp"

namespace rmmt {

// Internal signal that a speculative attempt observed a conflict (stale
// version, locked node, torn snapshot or active fallback) and must restart.
// Never escapes the engine.
struct ConflictAbort {};

// Shared synchronization state of one engine: the global version clock, the
// fallback lock/flag, and the count of commits currently publishing (drained
// by the fallback before it may write).
struct EngineSync {
  std::atomic<std::uint64_t> clock{0};
  std::mutex fallback_mu;
  std::atomic<std::uint32_t> fallback_held{0};
  std::atomic<std::uint32_t> publishers{0};
};

// Version stamp layout: (timestamp << 1) | locked. Node stamps live in the
// store's parallel arrays; the header carries its own stamp word.

// Buffered transactional view of the tree. Reads snapshot whole 64-byte
// nodes with the seqlock recipe and validate against the read version rv
// (so every observed state is consistent); writes go to private copies and
// are published at commit under per-node CAS locks.
//
// The same context also runs the fallback path: under the held fallback
// lock (all publishers drained) validation is vacuous and the commit cannot
// fail, but it still participates in the version clock so speculative
// readers detect its writes.
class TxnContext {
 public:
  TxnContext() = default;

  void bind(NodeStore& store, VersionedHeader& hdr, const TreeParams& params, EngineSync& sync) {
    store_ = &store;
    hdr_ = &hdr;
    params_ = &params;
    sync_ = &sync;
  }

  void begin(bool fallback_mode) {
    assert(!active_);
    active_ = true;
    fallback_ = fallback_mode;
    rv_ = sync_->clock.load(std::memory_order_acquire);
    count_ = 0;
    refs_.clear();
    allocs_.clear();
    has_writes_ = false;
    hdr_read_ = hdr_dirty_ = hdr_locked_ = false;
  }

  // --- context interface used by the tree algorithms ---

  const Node& read(NodeRef r) {
    std::uint32_t i = find_cached(r);
    if (i != kNotCached) return entry(i).copy;
    if (!fallback_ && sync_->fallback_held.load(std::memory_order_acquire)) throw ConflictAbort{};
    Entry& e = push_entry(r);
    if (!snapshot(r, e.copy, e.ver)) {
      --count_;
      refs_.pop_back();
      throw ConflictAbort{};
    }
    return e.copy;
  }

  Node& write(NodeRef r) {
    read(r);
    Entry& e = entry(find_cached(r));
    assert(!e.freed);
    e.dirty = true;
    has_writes_ = true;
    return e.copy;
  }

  NodeRef alloc_node() {
    NodeRef r = store_->alloc();
    allocs_.push_back(r);
    Entry& e = push_entry(r);
    e.ver = store_->version(r).load(std::memory_order_acquire);
    assert(!(e.ver & 1) && "slots on the free list are never locked");
    e.copy.init_leaf();
    e.dirty = true;
    e.is_alloc = true;
    has_writes_ = true;
    return r;
  }

  void free_node(NodeRef r) {
    read(r);
    Entry& e = entry(find_cached(r));
    e.freed = true;
    has_writes_ = true;
  }

  TreeHeader header() {
    if (!hdr_read_) {
      if (!fallback_ && sync_->fallback_held.load(std::memory_order_acquire)) throw ConflictAbort{};
      std::uint64_t v1 = hdr_->ver.load(std::memory_order_acquire);
      if (!fallback_ && ((v1 & 1) || (v1 >> 1) > rv_)) throw ConflictAbort{};
      std::uint64_t root = std::atomic_ref<std::uint64_t>(hdr_->root).load(std::memory_order_relaxed);
      std::uint64_t height =
          std::atomic_ref<std::uint64_t>(hdr_->height).load(std::memory_order_relaxed);
      std::atomic_thread_fence(std::memory_order_acquire);
      std::uint64_t v2 = hdr_->ver.load(std::memory_order_relaxed);
      if (!fallback_ && v2 != v1) throw ConflictAbort{};
      hdr_ver_ = v1;
      hdr_copy_ = {root, height};
      hdr_read_ = true;
    }
    return hdr_copy_;
  }

  void set_header(TreeHeader h) {
    header();  // ensure the stamp is part of the read set
    hdr_copy_ = h;
    hdr_dirty_ = true;
  }

  const TreeParams& params() const { return *params_; }

  // --- commit machinery (driven by the engine) ---

  bool read_only() const { return !has_writes_ && !hdr_dirty_; }

  // Read-only transactions are already consistent at rv thanks to per-read
  // validation; only writers run the lock/validate/publish protocol.
  bool try_commit(std::uint64_t* commit_stamp) {
    assert(active_ && !fallback_);
    if (read_only()) {
      if (commit_stamp) *commit_stamp = rv_;
      finish();
      return true;
    }
    sync_->publishers.fetch_add(1, std::memory_order_seq_cst);
    if (sync_->fallback_held.load(std::memory_order_seq_cst)) {
      sync_->publishers.fetch_sub(1, std::memory_order_release);
      return false;
    }
    if (!lock_and_validate()) {
      sync_->publishers.fetch_sub(1, std::memory_order_release);
      return false;
    }
    std::uint64_t wv = sync_->clock.fetch_add(1, std::memory_order_acq_rel) + 1;
    publish(wv);
    sync_->publishers.fetch_sub(1, std::memory_order_release);
    if (commit_stamp) *commit_stamp = wv;
    finish();
    return true;
  }

  void commit_fallback(std::uint64_t* commit_stamp) {
    assert(active_ && fallback_);
    if (read_only()) {
      if (commit_stamp) *commit_stamp = rv_;
      finish();
      return;
    }
    bool locked = lock_and_validate();
    assert(locked && "fallback holds the lock: nothing can interfere");
    (void)locked;
    std::uint64_t wv = sync_->clock.fetch_add(1, std::memory_order_acq_rel) + 1;
    publish(wv);
    if (commit_stamp) *commit_stamp = wv;
    finish();
  }

  // Abandon the attempt: hand allocated slots back (their stamps are
  // untouched, so concurrent stale readers stay safe).
  void rollback() {
    for (NodeRef r : allocs_) store_->free_node(r);
    allocs_.clear();
    finish();
  }

 private:
  struct Entry {
    NodeRef ref = kNullRef;
    std::uint64_t ver = 0;
    Node copy;
    bool dirty = false;
    bool is_alloc = false;
    bool freed = false;
  };

  static constexpr std::uint32_t kBlock = 64;
  static constexpr std::uint32_t kNotCached = ~std::uint32_t(0);

  Entry& entry(std::uint32_t i) { return (*blocks_[i / kBlock])[i % kBlock]; }
  const Entry& entry(std::uint32_t i) const { return (*blocks_[i / kBlock])[i % kBlock]; }

  // Transactions touch at most a few dozen nodes (a handful of root-to-leaf
  // paths), so a linear scan over a dense ref array beats any hash scheme.
  std::uint32_t find_cached(NodeRef r) const {
    for (std::uint32_t i = 0; i < count_; ++i)
      if (refs_[i] == r) return i;
    return kNotCached;
  }

  Entry& push_entry(NodeRef r) {
    if (count_ == blocks_.size() * kBlock)
      blocks_.push_back(std::make_unique<std::array<Entry, kBlock>>());
    refs_.push_back(r);
    Entry& e = entry(count_++);
    e.ref = r;
    e.dirty = e.is_alloc = e.freed = false;
    return e;
  }

  // Seqlock snapshot of one node; false on lock/staleness/tear.
  bool snapshot(NodeRef r, Node& out, std::uint64_t& ver_out) {
    std::atomic<std::uint64_t>& vr = store_->version(r);
    std::uint64_t v1 = vr.load(std::memory_order_acquire);
    if (!fallback_ && ((v1 & 1) || (v1 >> 1) > rv_)) return false;
    assert(!(v1 & 1) && "no publisher can be live while the fallback holds the lock");
    std::uint64_t* src = store_->raw_words(r);
    std::array<std::uint64_t, 8> tmp;
    for (int k = 0; k < 8; ++k)
      tmp[k] = std::atomic_ref<std::uint64_t>(src[k]).load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    std::uint64_t v2 = vr.load(std::memory_order_relaxed);
    if (!fallback_ && v2 != v1) return false;
    std::memcpy(&out, tmp.data(), sizeof(Node));
    ver_out = v1;
    return true;
  }

  // CAS-lock the write set in ref order (simultaneously validating the
  // written nodes), then confirm the read-only part is still at its read
  // stamps. On failure every taken lock is released untouched.
  bool lock_and_validate() {
    wset_.clear();
    for (std::uint32_t i = 0; i < count_; ++i) {
      Entry& e = entry(i);
      if (e.is_alloc && e.freed) continue;  // never published, recycled at commit
      if (e.dirty || e.freed) wset_.push_back(i);
    }
    std::sort(wset_.begin(), wset_.end(),
              [this](std::uint32_t a, std::uint32_t b) { return entry(a).ref < entry(b).ref; });
    std::size_t taken = 0;
    bool ok = true;
    for (; taken < wset_.size(); ++taken) {
      Entry& e = entry(wset_[taken]);
      std::uint64_t expect = e.ver;
      if (!store_->version(e.ref).compare_exchange_strong(expect, e.ver | 1,
                                                          std::memory_order_acq_rel)) {
        ok = false;
        break;
      }
    }
    if (ok && hdr_read_) {
      std::uint64_t expect = hdr_ver_;
      if (hdr_dirty_) {
        if (!hdr_->ver.compare_exchange_strong(expect, hdr_ver_ | 1, std::memory_order_acq_rel))
          ok = false;
        else
          hdr_locked_ = true;
      } else if (hdr_->ver.load(std::memory_order_acquire) != hdr_ver_) {
        ok = false;
      }
    }
    if (ok) {
      for (std::uint32_t i = 0; i < count_; ++i) {
        Entry& e = entry(i);
        if (e.dirty || e.freed || e.is_alloc) continue;
        if (store_->version(e.ref).load(std::memory_order_acquire) != e.ver) {
          ok = false;
          break;
        }
      }
    }
    if (!ok) {
      for (std::size_t k = 0; k < taken; ++k) {
        Entry& e = entry(wset_[k]);
        store_->version(e.ref).store(e.ver, std::memory_order_release);
      }
      if (hdr_locked_) {
        hdr_->ver.store(hdr_ver_, std::memory_order_release);
        hdr_locked_ = false;
      }
      return false;
    }
    return true;
  }

  // Caller holds every lock in the write set. Copy the buffered payloads
  // out word-by-word (stale speculative snapshots may race these stores,
  // which is why they are atomic), then release locks to stamp wv.
  void publish(std::uint64_t wv) {
    for (std::uint32_t i : wset_) {
      Entry& e = entry(i);
      if (e.freed) continue;  // payload stays; only the stamp moves forward
      std::uint64_t* dst = store_->raw_words(e.ref);
      std::array<std::uint64_t, 8> tmp;
      std::memcpy(tmp.data(), &e.copy, sizeof(Node));
      for (int k = 0; k < 8; ++k)
        std::atomic_ref<std::uint64_t>(dst[k]).store(tmp[k], std::memory_order_relaxed);
    }
    if (hdr_dirty_) {
      std::atomic_ref<std::uint64_t>(hdr_->root).store(hdr_copy_.root, std::memory_order_relaxed);
      std::atomic_ref<std::uint64_t>(hdr_->height)
          .store(hdr_copy_.height, std::memory_order_relaxed);
    }
    std::atomic_thread_fence(std::memory_order_release);
    for (std::uint32_t i : wset_) {
      Entry& e = entry(i);
      store_->version(e.ref).store(wv << 1, std::memory_order_release);
    }
    if (hdr_locked_) {
      hdr_->ver.store(wv << 1, std::memory_order_release);
      hdr_locked_ = false;
    }
    // Freed slots (and alloc+freed churn) go back to the pool only after
    // their stamps advanced, so recycled refs always look "newer than rv"
    // to any transaction that could still hold a stale path through them.
    for (std::uint32_t i = 0; i < count_; ++i) {
      Entry& e = entry(i);
      if (e.freed) store_->free_node(e.ref);
    }
    allocs_.clear();
  }

  void finish() { active_ = false; }

  NodeStore* store_ = nullptr;
  VersionedHeader* hdr_ = nullptr;
  const TreeParams* params_ = nullptr;
  EngineSync* sync_ = nullptr;

  std::vector<std::unique_ptr<std::array<Entry, kBlock>>> blocks_;
  std::uint32_t count_ = 0;
  std::vector<NodeRef> refs_;
  std::vector<NodeRef> allocs_;
  std::vector<std::uint32_t> wset_;

  TreeHeader hdr_copy_{};
  std::uint64_t hdr_ver_ = 0;
  bool has_writes_ = false;
  bool hdr_read_ = false;
  bool hdr_dirty_ = false;
  bool hdr_locked_ = false;

  std::uint64_t rv_ = 0;
  bool fallback_ = false;
  bool active_ = false;
};

}  // namespace rmmt
