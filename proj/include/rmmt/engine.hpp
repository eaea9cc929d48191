#pragma once

#include <array>
#include <atomic>
#include <cassert>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string_view>
#include <thread>
#include <type_traits>
#include <utility>

#include "rmmt/error.hpp"
#include "rmmt/tree.hpp"
#include "rmmt/tree_ops.hpp"
#include "rmmt/txn.hpp"

namespace rmmt {

enum class ConcurrencyMode { rwlock, speculative };

inline const char* mode_name(ConcurrencyMode m) {
  return m == ConcurrencyMode::rwlock ? "rwlock" : "speculative";
}

inline ConcurrencyMode parse_mode(std::string_view s) {
  if (s == "rwlock") return ConcurrencyMode::rwlock;
  if (s == "speculative") return ConcurrencyMode::speculative;
  fail(Errc::config_error, "unknown concurrency mode (expected rwlock|speculative)");
}

// Aggregated operation counters. Identities (when no domain errors were
// raised through the engine):
//   attempts        == fast_commits + fallback_commits + aborts
//   reads_done + writes_done == fast_commits + fallback_commits
struct TxnStats {
  std::uint64_t attempts = 0;
  std::uint64_t fast_commits = 0;
  std::uint64_t fallback_commits = 0;
  std::uint64_t aborts = 0;
  std::uint64_t reads_done = 0;
  std::uint64_t writes_done = 0;
};

// Concurrency layer over a Tree. Two modes:
//
//  * rwlock      — a single std::shared_mutex; queries take it shared,
//                  updates exclusive, running directly in place.
//  * speculative — software transactions over versioned nodes. Each
//                  operation gets retry_limit + 1 optimistic attempts; if
//                  all of them abort the operation reruns under a global
//                  fallback lock that first drains in-flight committers and
//                  blocks new ones, so it cannot fail. Speculative attempts
//                  observe the fallback flag on every fresh read, which
//                  emulates keeping the fallback lock in every read set.
//
// Domain errors (rmmt::Error) thrown by an operation propagate to the
// caller in either mode and leave the sequence unchanged: speculative
// attempts buffer all writes until commit, and per-read validation
// guarantees the error was decided on a consistent snapshot. Such aborted
// operations are not recorded in the stats.
class Engine {
 public:
  Engine(Tree& tree, ConcurrencyMode mode, unsigned retry_limit = 2)
      : tree_(&tree), mode_(mode), retry_(retry_limit) {}

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  ConcurrencyMode mode() const { return mode_; }
  unsigned retry_limit() const { return retry_; }
  Tree& tree() { return *tree_; }

  // Test hook: decide extra conflicts. Called after the body of every
  // speculative attempt (argument = attempt index, 0-based); returning true
  // aborts that attempt. Never consulted by the fallback path. Set only
  // while the engine is quiescent.
  void set_conflict_injector(std::function<bool(unsigned)> fn) { injector_ = std::move(fn); }

  TxnStats stats() const {
    TxnStats s;
    for (const Lane& l : lanes_) {
      s.attempts += l.attempts.load(std::memory_order_relaxed);
      s.fast_commits += l.fast.load(std::memory_order_relaxed);
      s.fallback_commits += l.fallback.load(std::memory_order_relaxed);
      s.aborts += l.aborts.load(std::memory_order_relaxed);
      s.reads_done += l.reads.load(std::memory_order_relaxed);
      s.writes_done += l.writes.load(std::memory_order_relaxed);
    }
    return s;
  }

  void reset_stats() {
    for (Lane& l : lanes_) {
      l.attempts.store(0, std::memory_order_relaxed);
      l.fast.store(0, std::memory_order_relaxed);
      l.fallback.store(0, std::memory_order_relaxed);
      l.aborts.store(0, std::memory_order_relaxed);
      l.reads.store(0, std::memory_order_relaxed);
      l.writes.store(0, std::memory_order_relaxed);
    }
  }

  // The result type of a generic body; it must come out the same whether the
  // body runs under DirectContext (rwlock mode) or TxnContext (speculative).
  template <class Fn>
  using ResultOf = std::invoke_result_t<Fn&, DirectContext&>;

  // Run an arbitrary read-only body. The callable must be generic over the
  // context type (rwlock mode passes DirectContext&, speculative mode
  // TxnContext&) and must not mutate through it.
  template <class Fn>
  ResultOf<Fn> execute_read(Fn&& fn) {
    return run<false>(std::forward<Fn>(fn), nullptr);
  }

  template <class Fn>
  ResultOf<Fn> execute_write(Fn&& fn) {
    return run<true>(std::forward<Fn>(fn), nullptr);
  }

  // Like execute_write but also reports the commit stamp, which orders the
  // write against every other stamped commit of this engine.
  template <class Fn>
  ResultOf<Fn> execute_write_stamped(Fn&& fn, std::uint64_t& stamp_out) {
    return run<true>(std::forward<Fn>(fn), &stamp_out);
  }

  // --- sequence operations ---

  std::uint64_t size() {
    return execute_read([](auto& c) { return ops::total_size(c); });
  }
  bool open_at(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::access(c, i); });
  }
  std::int64_t excess_at(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::excess(c, i); });
  }
  std::optional<std::int64_t> fwd_search(std::uint64_t i, std::int64_t d) {
    return execute_read([=](auto& c) { return ops::fwd_search(c, i, d); });
  }
  std::optional<std::int64_t> bwd_search(std::uint64_t i, std::int64_t d) {
    return execute_read([=](auto& c) { return ops::bwd_search(c, i, d); });
  }
  std::uint64_t find_close(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::find_close(c, i); });
  }
  std::uint64_t find_open(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::find_open(c, i); });
  }
  std::optional<std::uint64_t> enclose(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::enclose(c, i); });
  }
  std::int64_t depth_at(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::depth(c, i); });
  }
  std::uint64_t subtree_size(std::uint64_t i) {
    return execute_read([i](auto& c) { return ops::subtree_size(c, i); });
  }
  std::pair<std::int64_t, std::uint64_t> range_min(std::uint64_t i, std::uint64_t j) {
    return execute_read([=](auto& c) { return ops::range_min(c, i, j); });
  }
  std::optional<std::uint64_t> first_open_at_or_after(std::uint64_t p) {
    return execute_read([p](auto& c) { return ops::first_open_at_or_after(c, p); });
  }
  std::optional<std::uint64_t> first_leaf_pair_at_or_after(std::uint64_t p) {
    return execute_read([p](auto& c) { return ops::first_leaf_pair_at_or_after(c, p); });
  }
  void insert_pair(std::uint64_t i, std::uint64_t j) {
    execute_write([=](auto& c) { ops::insert_pair(c, i, j); });
  }
  void insert_leaf(std::uint64_t i) {
    execute_write([i](auto& c) { ops::insert_leaf(c, i); });
  }
  void delete_pair(std::uint64_t i) {
    execute_write([i](auto& c) { ops::delete_pair(c, i); });
  }

 private:
  struct alignas(64) Lane {
    std::atomic<std::uint64_t> attempts{0};
    std::atomic<std::uint64_t> fast{0};
    std::atomic<std::uint64_t> fallback{0};
    std::atomic<std::uint64_t> aborts{0};
    std::atomic<std::uint64_t> reads{0};
    std::atomic<std::uint64_t> writes{0};
  };

  Lane& lane() {
    static thread_local std::size_t slot =
        std::hash<std::thread::id>{}(std::this_thread::get_id());
    return lanes_[slot % lanes_.size()];
  }

  static TxnContext& tls_txn() {
    static thread_local TxnContext ctx;
    return ctx;
  }

#ifndef NDEBUG
  struct ReentryGuard {
    ReentryGuard() {
      assert(!in_op() && "engine operations must not nest on one thread");
      in_op() = true;
    }
    ~ReentryGuard() { in_op() = false; }
    static bool& in_op() {
      static thread_local bool flag = false;
      return flag;
    }
  };
#else
  struct ReentryGuard {};
#endif

  void record_commit(bool is_write, bool via_fallback) {
    Lane& l = lane();
    l.attempts.fetch_add(1, std::memory_order_relaxed);
    (via_fallback ? l.fallback : l.fast).fetch_add(1, std::memory_order_relaxed);
    (is_write ? l.writes : l.reads).fetch_add(1, std::memory_order_relaxed);
  }

  void record_abort() {
    Lane& l = lane();
    l.attempts.fetch_add(1, std::memory_order_relaxed);
    l.aborts.fetch_add(1, std::memory_order_relaxed);
  }

  template <bool IsWrite, class Fn>
  ResultOf<Fn> run(Fn&& fn, std::uint64_t* stamp_out) {
    ReentryGuard guard;
    if (mode_ == ConcurrencyMode::rwlock) return run_locked<IsWrite>(fn, stamp_out);
    return run_speculative<IsWrite>(fn, stamp_out);
  }

  template <bool IsWrite, class Fn>
  ResultOf<Fn> run_locked(Fn& fn, std::uint64_t* stamp_out) {
    using R = std::invoke_result_t<Fn&, DirectContext&>;
    auto body = [&](auto lk) {
      DirectContext ctx = tree_->direct();
      (void)lk;
      if constexpr (std::is_void_v<R>) {
        fn(ctx);
        if (stamp_out) *stamp_out = bump_clock_locked();
        record_commit(IsWrite, false);
      } else {
        R r = fn(ctx);
        if (stamp_out) *stamp_out = bump_clock_locked();
        record_commit(IsWrite, false);
        return r;
      }
    };
    if constexpr (IsWrite)
      return body(std::unique_lock(rw_));
    else
      return body(std::shared_lock(rw_));
  }

  std::uint64_t bump_clock_locked() {
    return sync_.clock.fetch_add(1, std::memory_order_relaxed) + 1;
  }

  template <bool IsWrite, class Fn>
  ResultOf<Fn> run_speculative(Fn& fn, std::uint64_t* stamp_out) {
    using R = std::invoke_result_t<Fn&, TxnContext&>;
    static_assert(std::is_same_v<R, ResultOf<Fn>>,
                  "body must return the same type under both context kinds");
    TxnContext& ctx = tls_txn();
    ctx.bind(tree_->store_, tree_->hdr_, tree_->params_, sync_);

    for (unsigned attempt = 0; attempt <= retry_; ++attempt) {
      try {
        ctx.begin(false);
        if constexpr (std::is_void_v<R>) {
          fn(ctx);
          if (injector_ && injector_(attempt)) throw ConflictAbort{};
          if (ctx.try_commit(stamp_out)) {
            record_commit(IsWrite, false);
            return;
          }
        } else {
          R r = fn(ctx);
          if (injector_ && injector_(attempt)) throw ConflictAbort{};
          if (ctx.try_commit(stamp_out)) {
            record_commit(IsWrite, false);
            return r;
          }
        }
        ctx.rollback();
        record_abort();
      } catch (const ConflictAbort&) {
        ctx.rollback();
        record_abort();
      } catch (...) {
        ctx.rollback();
        throw;
      }
    }

    // Fallback: serialize against other fallbacks, raise the flag, wait out
    // every in-flight committer, then run with validation disabled.
    std::lock_guard<std::mutex> g(sync_.fallback_mu);
    sync_.fallback_held.store(1, std::memory_order_seq_cst);
    while (sync_.publishers.load(std::memory_order_seq_cst) != 0) std::this_thread::yield();
    struct FlagClear {
      std::atomic<std::uint32_t>* f;
      ~FlagClear() { f->store(0, std::memory_order_release); }
    } clear{&sync_.fallback_held};
    try {
      ctx.begin(true);
      if constexpr (std::is_void_v<R>) {
        fn(ctx);
        ctx.commit_fallback(stamp_out);
        record_commit(IsWrite, true);
      } else {
        R r = fn(ctx);
        ctx.commit_fallback(stamp_out);
        record_commit(IsWrite, true);
        return r;
      }
    } catch (...) {
      ctx.rollback();
      throw;
    }
  }

  Tree* tree_;
  ConcurrencyMode mode_;
  unsigned retry_;
  EngineSync sync_;
  std::shared_mutex rw_;
  std::function<bool(unsigned)> injector_;
  std::array<Lane, 16> lanes_{};
};

}  // namespace rmmt
