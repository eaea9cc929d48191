#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "rmmt/block.hpp"
#include "rmmt/context.hpp"
#include "rmmt/error.hpp"
#include "rmmt/node.hpp"
#include "rmmt/paren_seq.hpp"

// Tree algorithms over a generic access context. A context provides:
//   const Node& read(NodeRef);   Node& write(NodeRef);
//   NodeRef alloc_node();        void free_node(NodeRef);
//   TreeHeader header();         void set_header(TreeHeader);
//   const TreeParams& params();
// References returned by read/write stay valid for the whole operation.
namespace rmmt::ops {

inline constexpr std::uint32_t kMaxHeight = 48;

struct PathEntry {
  NodeRef ref = kNullRef;
  std::uint32_t child = 0;       // index of the child we descended into
  std::int64_t excess_base = 0;  // global excess at the start of this node's range
  std::uint64_t pos_base = 0;    // global position of the start of this node's range
};

struct LeafLoc {
  NodeRef leaf = kNullRef;
  std::uint32_t offset = 0;
  std::uint64_t leaf_start = 0;
  std::int64_t excess_before = 0;
  std::array<PathEntry, kMaxHeight> path{};
  std::uint32_t depth = 0;  // internal levels above the leaf
};

template <class Ctx>
std::uint64_t total_size(Ctx& ctx) {
  return ctx.read(ctx.header().root).summary.num_parens;
}

// Walk down to the leaf containing pos. With for_insert set, a position on a
// boundary between two children resolves to the left one, so appends land in
// the leftmost leaf that can take them.
template <class Ctx>
LeafLoc locate(Ctx& ctx, std::uint64_t pos, bool for_insert) {
  LeafLoc loc;
  NodeRef cur = ctx.header().root;
  std::int64_t node_excess = 0;
  std::uint64_t node_pos = 0;
  std::uint64_t local = pos;
  for (;;) {
    const Node& n = ctx.read(cur);
    if (n.is_leaf()) {
      assert(local <= n.leaf_size());
      loc.leaf = cur;
      loc.offset = std::uint32_t(local);
      loc.leaf_start = node_pos;
      loc.excess_before = node_excess;
      return loc;
    }
    assert(loc.depth < kMaxHeight);
    std::int64_t child_excess = node_excess;
    std::uint64_t child_pos = node_pos;
    std::uint32_t cc = n.child_count();
    std::uint32_t c = 0;
    for (;; ++c) {
      assert(c < cc);
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      if (local < s.num_parens || (for_insert && local == s.num_parens)) break;
      local -= s.num_parens;
      child_excess += s.total_excess;
      child_pos += s.num_parens;
    }
    loc.path[loc.depth++] = {cur, c, node_excess, node_pos};
    cur = n.child(c);
    node_excess = child_excess;
    node_pos = child_pos;
  }
}

template <class Ctx>
bool access(Ctx& ctx, std::uint64_t pos) {
  if (pos >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(pos));
  LeafLoc loc = locate(ctx, pos, false);
  return bit_get(ctx.read(loc.leaf).bits(), loc.offset);
}

// Global inclusive prefix excess of pos.
template <class Ctx>
std::int64_t excess(Ctx& ctx, std::uint64_t pos) {
  if (pos >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(pos));
  LeafLoc loc = locate(ctx, pos, false);
  return loc.excess_before + prefix_excess(ctx.read(loc.leaf).bits(), loc.offset + 1);
}

// Descend into a subtree known to contain a position with global excess ==
// target; min/max pruning picks the branch. Excess moves in +-1 steps, so a
// child whose [min,max] interval covers target must contain a hit.
template <class Ctx>
std::uint64_t descend_fwd(Ctx& ctx, NodeRef ref, std::int64_t ebase, std::uint64_t pbase,
                          std::int64_t target) {
  for (;;) {
    const Node& n = ctx.read(ref);
    if (n.is_leaf()) {
      auto j = find_prefix_fwd(n.bits(), n.leaf_size(), 0, std::int32_t(target - ebase));
      assert(j && "summary interval promised a hit in this leaf");
      return pbase + *j;
    }
    std::uint32_t cc = n.child_count();
    NodeRef next = kNullRef;
    for (std::uint32_t c = 0; c < cc; ++c) {
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      if (target >= ebase + s.min_excess && target <= ebase + s.max_excess) {
        next = n.child(c);
        break;
      }
      ebase += s.total_excess;
      pbase += s.num_parens;
    }
    assert(next != kNullRef && "summary interval promised a hit in this subtree");
    ref = next;
  }
}

template <class Ctx>
std::uint64_t descend_bwd(Ctx& ctx, NodeRef ref, std::int64_t ebase, std::uint64_t pbase,
                          std::int64_t target) {
  for (;;) {
    const Node& n = ctx.read(ref);
    if (n.is_leaf()) {
      auto j = find_prefix_bwd(n.bits(), n.leaf_size(), std::int32_t(target - ebase));
      assert(j && "summary interval promised a hit in this leaf");
      return pbase + *j;
    }
    std::uint32_t cc = n.child_count();
    std::array<std::int64_t, kArity> eb;
    std::array<std::uint64_t, kArity> pb;
    std::int64_t e = ebase;
    std::uint64_t p = pbase;
    for (std::uint32_t c = 0; c < cc; ++c) {
      eb[c] = e;
      pb[c] = p;
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      e += s.total_excess;
      p += s.num_parens;
    }
    NodeRef next = kNullRef;
    for (std::uint32_t c = cc; c-- > 0;) {
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      if (target >= eb[c] + s.min_excess && target <= eb[c] + s.max_excess) {
        next = n.child(c);
        ebase = eb[c];
        pbase = pb[c];
        break;
      }
    }
    assert(next != kNullRef && "summary interval promised a hit in this subtree");
    ref = next;
  }
}

// Smallest position > loc's position whose global excess equals target.
template <class Ctx>
std::optional<std::uint64_t> fwd_from(Ctx& ctx, const LeafLoc& loc, std::int64_t target) {
  const Node& leaf = ctx.read(loc.leaf);
  std::int64_t local = target - loc.excess_before;
  if (local >= -std::int64_t(leaf.leaf_size()) && local <= std::int64_t(leaf.leaf_size())) {
    if (auto j = find_prefix_fwd(leaf.bits(), leaf.leaf_size(), loc.offset + 1, std::int32_t(local)))
      return loc.leaf_start + *j;
  }
  for (std::uint32_t lvl = loc.depth; lvl-- > 0;) {
    const PathEntry& pe = loc.path[lvl];
    const Node& n = ctx.read(pe.ref);
    std::int64_t e = pe.excess_base;
    std::uint64_t p = pe.pos_base;
    for (std::uint32_t c = 0; c <= pe.child; ++c) {
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      e += s.total_excess;
      p += s.num_parens;
    }
    for (std::uint32_t c = pe.child + 1; c < n.child_count(); ++c) {
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      if (target >= e + s.min_excess && target <= e + s.max_excess)
        return descend_fwd(ctx, n.child(c), e, p, target);
      e += s.total_excess;
      p += s.num_parens;
    }
  }
  return std::nullopt;
}

// Largest position < loc's position whose global excess equals target;
// -1 stands for the virtual left edge (excess 0 before position 0).
template <class Ctx>
std::optional<std::int64_t> bwd_from(Ctx& ctx, const LeafLoc& loc, std::int64_t target) {
  const Node& leaf = ctx.read(loc.leaf);
  std::int64_t local = target - loc.excess_before;
  if (local >= -std::int64_t(loc.offset) && local <= std::int64_t(loc.offset)) {
    if (auto j = find_prefix_bwd(leaf.bits(), loc.offset, std::int32_t(local)))
      return std::int64_t(loc.leaf_start + *j);
  }
  for (std::uint32_t lvl = loc.depth; lvl-- > 0;) {
    const PathEntry& pe = loc.path[lvl];
    const Node& n = ctx.read(pe.ref);
    std::array<std::int64_t, kArity> eb;
    std::array<std::uint64_t, kArity> pb;
    std::int64_t e = pe.excess_base;
    std::uint64_t p = pe.pos_base;
    for (std::uint32_t c = 0; c < pe.child; ++c) {
      eb[c] = e;
      pb[c] = p;
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      e += s.total_excess;
      p += s.num_parens;
    }
    for (std::uint32_t c = pe.child; c-- > 0;) {
      const NodeSummary& s = ctx.read(n.child(c)).summary;
      if (target >= eb[c] + s.min_excess && target <= eb[c] + s.max_excess)
        return std::int64_t(descend_bwd(ctx, n.child(c), eb[c], pb[c], target));
    }
  }
  if (target == 0) return -1;
  return std::nullopt;
}

template <class Ctx>
std::optional<std::int64_t> fwd_search(Ctx& ctx, std::uint64_t i, std::int64_t d) {
  if (i >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(i));
  LeafLoc loc = locate(ctx, i, false);
  std::int64_t e_i = loc.excess_before + prefix_excess(ctx.read(loc.leaf).bits(), loc.offset + 1);
  if (auto r = fwd_from(ctx, loc, e_i + d)) return std::int64_t(*r);
  return std::nullopt;
}

template <class Ctx>
std::optional<std::int64_t> bwd_search(Ctx& ctx, std::uint64_t i, std::int64_t d) {
  if (i >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(i));
  LeafLoc loc = locate(ctx, i, false);
  std::int64_t e_i = loc.excess_before + prefix_excess(ctx.read(loc.leaf).bits(), loc.offset + 1);
  return bwd_from(ctx, loc, e_i + d);
}

template <class Ctx>
std::uint64_t find_close(Ctx& ctx, std::uint64_t i) {
  if (i >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(i));
  LeafLoc loc = locate(ctx, i, false);
  const Node& leaf = ctx.read(loc.leaf);
  if (!bit_get(leaf.bits(), loc.offset))
    fail(Errc::not_open, "find_close at position " + std::to_string(i));
  std::int64_t e_i = loc.excess_before + prefix_excess(leaf.bits(), loc.offset + 1);
  auto r = fwd_from(ctx, loc, e_i - 1);
  if (!r) fail(Errc::unbalanced, "open parenthesis has no matching close");
  return *r;
}

template <class Ctx>
std::uint64_t find_open(Ctx& ctx, std::uint64_t i) {
  if (i >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(i));
  LeafLoc loc = locate(ctx, i, false);
  const Node& leaf = ctx.read(loc.leaf);
  if (bit_get(leaf.bits(), loc.offset))
    fail(Errc::not_close, "find_open at position " + std::to_string(i));
  std::int64_t e_i = loc.excess_before + prefix_excess(leaf.bits(), loc.offset + 1);
  auto r = bwd_from(ctx, loc, e_i);
  if (!r) fail(Errc::unbalanced, "close parenthesis has no matching open");
  return std::uint64_t(*r + 1);
}

// Position of the open parenthesis of the closest strictly enclosing pair;
// nullopt for a top-level pair (global excess 1 at i).
template <class Ctx>
std::optional<std::uint64_t> enclose(Ctx& ctx, std::uint64_t i) {
  if (i >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(i));
  LeafLoc loc = locate(ctx, i, false);
  const Node& leaf = ctx.read(loc.leaf);
  if (!bit_get(leaf.bits(), loc.offset))
    fail(Errc::not_open, "enclose at position " + std::to_string(i));
  std::int64_t e_i = loc.excess_before + prefix_excess(leaf.bits(), loc.offset + 1);
  if (e_i == 1) return std::nullopt;
  auto r = bwd_from(ctx, loc, e_i - 2);
  if (!r) fail(Errc::unbalanced, "inconsistent excess while climbing");
  return std::uint64_t(*r + 1);
}

template <class Ctx>
std::int64_t depth(Ctx& ctx, std::uint64_t i) {
  if (i >= total_size(ctx)) fail(Errc::out_of_range, "position " + std::to_string(i));
  LeafLoc loc = locate(ctx, i, false);
  const Node& leaf = ctx.read(loc.leaf);
  if (!bit_get(leaf.bits(), loc.offset))
    fail(Errc::not_open, "depth at position " + std::to_string(i));
  return loc.excess_before + prefix_excess(leaf.bits(), loc.offset + 1);
}

template <class Ctx>
std::uint64_t subtree_size(Ctx& ctx, std::uint64_t i) {
  return (find_close(ctx, i) - i + 1) / 2;
}

template <class Ctx>
NodeSummary slice_rec(Ctx& ctx, NodeRef ref, std::uint64_t lo, std::uint64_t hi) {
  const Node& n = ctx.read(ref);
  if (lo == 0 && hi + 1 == n.summary.num_parens) return n.summary;
  if (n.is_leaf()) return summarize_bits_range(n.bits(), std::uint32_t(lo), std::uint32_t(hi));
  NodeSummary acc{};
  std::uint64_t cur = 0;
  for (std::uint32_t c = 0; c < n.child_count() && cur <= hi; ++c) {
    const NodeSummary& s = ctx.read(n.child(c)).summary;
    std::uint64_t end = cur + s.num_parens;
    if (end > lo) {
      std::uint64_t l = lo > cur ? lo - cur : 0;
      std::uint64_t h = std::min<std::uint64_t>(hi, end - 1) - cur;
      acc = combine(acc, slice_rec(ctx, n.child(c), l, h));
    }
    cur = end;
  }
  return acc;
}

// Summary of the inclusive range [i, j], excesses relative to i.
template <class Ctx>
NodeSummary slice_summary(Ctx& ctx, std::uint64_t i, std::uint64_t j) {
  if (i > j || j >= total_size(ctx))
    fail(Errc::bad_range, "slice [" + std::to_string(i) + ", " + std::to_string(j) + "]");
  return slice_rec(ctx, ctx.header().root, i, j);
}

// Minimum global excess over [i, j] and its multiplicity.
template <class Ctx>
std::pair<std::int64_t, std::uint64_t> range_min(Ctx& ctx, std::uint64_t i, std::uint64_t j) {
  NodeSummary s = slice_summary(ctx, i, j);
  std::int64_t before = i > 0 ? excess(ctx, i - 1) : 0;
  return {before + s.min_excess, s.min_count};
}

template <class Ctx>
NodeSummary fold_children(Ctx& ctx, const Node& n) {
  NodeSummary acc{};
  for (std::uint32_t c = 0; c < n.child_count(); ++c)
    acc = combine(acc, ctx.read(n.child(c)).summary);
  return acc;
}

// Insert one symbol; returns the new right sibling if this node split.
template <class Ctx>
std::optional<NodeRef> insert_rec(Ctx& ctx, NodeRef ref, std::uint64_t pos, bool open) {
  const Node& n0 = ctx.read(ref);
  if (n0.is_leaf()) {
    std::uint32_t size = n0.leaf_size();
    assert(pos <= size);
    if (size < ctx.params().leaf_cap) {
      Node& n = ctx.write(ref);
      bits_insert(n.bits(), size, std::uint32_t(pos), open);
      n.summary = summarize_bits(n.bits(), size + 1);
      return std::nullopt;
    }
    // Full: split the logical size+1 bits into ceil/floor halves.
    std::array<std::uint64_t, kLeafWords + 1> tmp{};
    bits_copy(tmp.data(), 0, n0.bits(), 0, size);
    bits_insert(tmp.data(), size, std::uint32_t(pos), open);
    std::uint32_t left_n = (size + 2) / 2;
    std::uint32_t right_n = size + 1 - left_n;
    NodeRef rref = ctx.alloc_node();
    Node& rn = ctx.write(rref);
    rn.init_leaf();
    bits_copy(rn.bits(), 0, tmp.data(), left_n, right_n);
    rn.summary = summarize_bits(rn.bits(), right_n);
    Node& ln = ctx.write(ref);
    ln.slots.fill(0);
    bits_copy(ln.bits(), 0, tmp.data(), 0, left_n);
    ln.summary = summarize_bits(ln.bits(), left_n);
    return rref;
  }
  std::uint32_t cc = n0.child_count();
  std::uint32_t c = 0;
  std::uint64_t local = pos;
  for (;; ++c) {
    assert(c < cc);
    const NodeSummary& s = ctx.read(n0.child(c)).summary;
    if (local <= s.num_parens) break;
    local -= s.num_parens;
  }
  auto split = insert_rec(ctx, n0.child(c), local, open);
  Node& n = ctx.write(ref);
  if (!split) {
    n.summary = fold_children(ctx, n);
    return std::nullopt;
  }
  if (cc < kArity) {
    for (std::uint32_t k = cc; k > c + 1; --k) n.slots[k] = n.slots[k - 1];
    n.slots[c + 1] = *split;
    n.set_child_count(cc + 1);
    n.summary = fold_children(ctx, n);
    return std::nullopt;
  }
  // Overflow: six logical children split 3/3.
  std::array<NodeRef, kArity + 1> all{};
  for (std::uint32_t k = 0, j = 0; k < cc; ++k) {
    all[j++] = n.slots[k];
    if (k == c) all[j++] = *split;
  }
  std::uint32_t left_c = (kArity + 2) / 2;
  std::uint32_t right_c = kArity + 1 - left_c;
  NodeRef rref = ctx.alloc_node();
  Node& rn = ctx.write(rref);
  rn.init_internal();
  rn.set_child_count(right_c);
  for (std::uint32_t k = 0; k < right_c; ++k) rn.slots[k] = all[left_c + k];
  n.set_child_count(left_c);
  for (std::uint32_t k = 0; k < left_c; ++k) n.slots[k] = all[k];
  for (std::uint32_t k = left_c; k < kArity; ++k) n.slots[k] = kNullRef;
  n.summary = fold_children(ctx, n);
  rn.summary = fold_children(ctx, rn);
  return rref;
}

template <class Ctx>
void insert_symbol(Ctx& ctx, std::uint64_t pos, bool open) {
  TreeHeader h = ctx.header();
  auto split = insert_rec(ctx, h.root, pos, open);
  if (split) {
    NodeRef nr = ctx.alloc_node();
    Node& root = ctx.write(nr);
    root.init_internal();
    root.set_child_count(2);
    root.slots[0] = h.root;
    root.slots[1] = *split;
    root.summary = fold_children(ctx, root);
    h.root = nr;
    h.height += 1;
    ctx.set_header(h);
  }
}

// Child c of the internal node at parent_ref dropped below minimum occupancy.
// Steal from the preferred (left) sibling while it has spare units; merge the
// pair into its left node otherwise.
template <class Ctx>
void fix_underflow(Ctx& ctx, NodeRef parent_ref, std::uint32_t c) {
  const Node& p0 = ctx.read(parent_ref);
  std::uint32_t cc = p0.child_count();
  assert(cc >= 2);
  std::uint32_t sib = c > 0 ? c - 1 : c + 1;
  bool sib_left = sib < c;
  NodeRef a = p0.child(c), b = p0.child(sib);
  const Node& an0 = ctx.read(a);
  const Node& bn0 = ctx.read(b);

  if (an0.is_leaf()) {
    std::uint32_t mn = ctx.params().leaf_min();
    std::uint32_t asz = an0.leaf_size(), bsz = bn0.leaf_size();
    if (bsz > mn) {
      std::uint32_t k = std::min(mn - asz, bsz - mn);
      Node& an = ctx.write(a);
      Node& bn = ctx.write(b);
      std::array<std::uint64_t, 2 * kLeafWords> tmp{};
      if (sib_left) {
        bits_copy(tmp.data(), 0, bn.bits(), bsz - k, k);
        bits_copy(tmp.data(), k, an.bits(), 0, asz);
        an.slots.fill(0);
        bits_copy(an.bits(), 0, tmp.data(), 0, asz + k);
        bits_clear_from(bn.bits(), kLeafWords, bsz - k);
      } else {
        bits_copy(an.bits(), asz, bn.bits(), 0, k);
        bits_copy(tmp.data(), 0, bn.bits(), k, bsz - k);
        bn.slots.fill(0);
        bits_copy(bn.bits(), 0, tmp.data(), 0, bsz - k);
      }
      an.summary = summarize_bits(an.bits(), asz + k);
      bn.summary = summarize_bits(bn.bits(), bsz - k);
      return;
    }
    std::uint32_t lo = sib_left ? sib : c;
    std::uint32_t hi = sib_left ? c : sib;
    NodeRef keep = p0.child(lo), drop = p0.child(hi);
    const Node& dn = ctx.read(drop);
    std::uint32_t ds = dn.leaf_size();
    Node& kn = ctx.write(keep);
    std::uint32_t ks = kn.leaf_size();
    assert(ks + ds <= ctx.params().leaf_cap);
    bits_copy(kn.bits(), ks, dn.bits(), 0, ds);
    kn.summary = summarize_bits(kn.bits(), ks + ds);
    ctx.free_node(drop);
    Node& p = ctx.write(parent_ref);
    for (std::uint32_t k = hi; k + 1 < cc; ++k) p.slots[k] = p.slots[k + 1];
    p.slots[cc - 1] = kNullRef;
    p.set_child_count(cc - 1);
    return;
  }

  std::uint32_t acnt = an0.child_count(), bcnt = bn0.child_count();
  if (bcnt > kMinChildren) {
    std::uint32_t k = std::min(kMinChildren - acnt, bcnt - kMinChildren);
    Node& an = ctx.write(a);
    Node& bn = ctx.write(b);
    if (sib_left) {
      for (std::uint32_t t = acnt; t-- > 0;) an.slots[t + k] = an.slots[t];
      for (std::uint32_t t = 0; t < k; ++t) an.slots[t] = bn.slots[bcnt - k + t];
    } else {
      for (std::uint32_t t = 0; t < k; ++t) an.slots[acnt + t] = bn.slots[t];
      for (std::uint32_t t = 0; t + k < bcnt; ++t) bn.slots[t] = bn.slots[t + k];
    }
    for (std::uint32_t t = bcnt - k; t < kArity; ++t) bn.slots[t] = kNullRef;
    an.set_child_count(acnt + k);
    bn.set_child_count(bcnt - k);
    an.summary = fold_children(ctx, an);
    bn.summary = fold_children(ctx, bn);
    return;
  }
  std::uint32_t lo = sib_left ? sib : c;
  std::uint32_t hi = sib_left ? c : sib;
  NodeRef keep = p0.child(lo), drop = p0.child(hi);
  const Node& dn = ctx.read(drop);
  std::uint32_t ds = dn.child_count();
  Node& kn = ctx.write(keep);
  std::uint32_t ks = kn.child_count();
  assert(ks + ds <= kArity);
  for (std::uint32_t t = 0; t < ds; ++t) kn.slots[ks + t] = dn.slots[t];
  kn.set_child_count(ks + ds);
  kn.summary = fold_children(ctx, kn);
  ctx.free_node(drop);
  Node& p = ctx.write(parent_ref);
  for (std::uint32_t k = hi; k + 1 < cc; ++k) p.slots[k] = p.slots[k + 1];
  p.slots[cc - 1] = kNullRef;
  p.set_child_count(cc - 1);
}

template <class Ctx>
void erase_rec(Ctx& ctx, NodeRef ref, std::uint64_t pos) {
  const Node& n0 = ctx.read(ref);
  if (n0.is_leaf()) {
    std::uint32_t size = n0.leaf_size();
    assert(pos < size);
    Node& n = ctx.write(ref);
    bits_erase(n.bits(), size, std::uint32_t(pos));
    n.summary = summarize_bits(n.bits(), size - 1);
    return;
  }
  std::uint32_t cc = n0.child_count();
  std::uint32_t c = 0;
  std::uint64_t local = pos;
  for (;; ++c) {
    assert(c < cc);
    const NodeSummary& s = ctx.read(n0.child(c)).summary;
    if (local < s.num_parens) break;
    local -= s.num_parens;
  }
  erase_rec(ctx, n0.child(c), local);
  const Node& ch = ctx.read(n0.child(c));
  bool under = ch.is_leaf() ? ch.leaf_size() < ctx.params().leaf_min()
                            : ch.child_count() < kMinChildren;
  if (under) fix_underflow(ctx, ref, c);
  Node& n = ctx.write(ref);
  n.summary = fold_children(ctx, n);
}

template <class Ctx>
void erase_symbol(Ctx& ctx, std::uint64_t pos) {
  TreeHeader h = ctx.header();
  erase_rec(ctx, h.root, pos);
  bool changed = false;
  for (;;) {
    const Node& r = ctx.read(h.root);
    if (r.is_leaf() || r.child_count() > 1) break;
    NodeRef only = r.child(0);
    ctx.free_node(h.root);
    h.root = only;
    h.height -= 1;
    changed = true;
  }
  if (changed) ctx.set_header(h);
}

// Insert a matched pair: open lands at position i, close at position j+1 of
// the resulting sequence. The wrapped range [i, j) must itself be balanced.
template <class Ctx>
void insert_pair(Ctx& ctx, std::uint64_t i, std::uint64_t j) {
  std::uint64_t n = total_size(ctx);
  if (i > j || j > n)
    fail(Errc::out_of_range, "pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
  if (i < j) {
    NodeSummary s = slice_rec(ctx, ctx.header().root, i, j - 1);
    if (s.total_excess != 0 || s.min_excess < 0)
      fail(Errc::invalid_wrap, "wrapped range [" + std::to_string(i) + ", " + std::to_string(j) +
                                   ") is not balanced");
  }
  insert_symbol(ctx, j, false);
  insert_symbol(ctx, i, true);
}

template <class Ctx>
void insert_leaf(Ctx& ctx, std::uint64_t i) {
  insert_pair(ctx, i, i);
}

// Remove the pair opened at i; the enclosed range stays.
template <class Ctx>
void delete_pair(Ctx& ctx, std::uint64_t i) {
  std::uint64_t j = find_close(ctx, i);
  erase_symbol(ctx, j);
  erase_symbol(ctx, i);
}

// First position >= p holding an open parenthesis, scanning leaf by leaf.
template <class Ctx>
std::optional<std::uint64_t> first_open_at_or_after(Ctx& ctx, std::uint64_t p) {
  std::uint64_t n = total_size(ctx);
  while (p < n) {
    LeafLoc loc = locate(ctx, p, false);
    const Node& leaf = ctx.read(loc.leaf);
    std::uint32_t sz = leaf.leaf_size();
    for (std::uint32_t k = loc.offset; k < sz; ++k)
      if (bit_get(leaf.bits(), k)) return loc.leaf_start + k;
    p = loc.leaf_start + sz;
  }
  return std::nullopt;
}

// First position >= p opening a childless pair "()".
template <class Ctx>
std::optional<std::uint64_t> first_leaf_pair_at_or_after(Ctx& ctx, std::uint64_t p) {
  std::uint64_t n = total_size(ctx);
  while (p + 1 < n) {
    LeafLoc loc = locate(ctx, p, false);
    const Node& leaf = ctx.read(loc.leaf);
    std::uint32_t sz = leaf.leaf_size();
    for (std::uint32_t k = loc.offset; k < sz; ++k) {
      if (!bit_get(leaf.bits(), k)) continue;
      std::uint64_t gpos = loc.leaf_start + k;
      bool close_next;
      if (k + 1 < sz)
        close_next = !bit_get(leaf.bits(), k + 1);
      else if (gpos + 1 < n)
        close_next = !access(ctx, gpos + 1);
      else
        return std::nullopt;
      if (close_next) return gpos;
    }
    p = loc.leaf_start + sz;
  }
  return std::nullopt;
}

template <class Ctx>
void collect_rec(Ctx& ctx, NodeRef ref, ParenSeq& out) {
  const Node& n = ctx.read(ref);
  if (n.is_leaf()) {
    for (std::uint32_t k = 0; k < n.leaf_size(); ++k) out.push_back(bit_get(n.bits(), k));
    return;
  }
  for (std::uint32_t c = 0; c < n.child_count(); ++c) collect_rec(ctx, n.child(c), out);
}

template <class Ctx>
ParenSeq to_paren_seq(Ctx& ctx) {
  ParenSeq q;
  collect_rec(ctx, ctx.header().root, q);
  return q;
}

}  // namespace rmmt::ops
