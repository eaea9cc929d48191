#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rmmt/context.hpp"
#include "rmmt/error.hpp"
#include "rmmt/node.hpp"
#include "rmmt/paren_seq.hpp"
#include "rmmt/tree_ops.hpp"

namespace rmmt {

struct Violation {
  std::string path;  // child indices from the root, e.g. "0/3/1"
  std::string what;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }

  std::string to_string() const {
    std::string s;
    for (const auto& v : violations) s += v.path + ": " + v.what + "\n";
    return s;
  }
};

// Dynamic min-max tree over a balanced parentheses sequence. The class owns
// the node pool and header; all mutating/querying logic lives in rmmt::ops
// and is shared with the transactional engine. Methods here run through a
// DirectContext and are not thread-safe on their own — concurrent use goes
// through Engine.
class Tree {
 public:
  explicit Tree(TreeParams params = {}) : params_(params) {
    params_.check();
    DirectContext ctx = direct();
    NodeRef r = ctx.alloc_node();
    ctx.set_header({r, 1});
  }

  // Bottom-up bulk build. Every leaf gets floor(leaf_fill * leaf_cap)
  // symbols except at the tail, where the remainder is absorbed into the
  // previous unit or the last two units are rebalanced so minimum occupancy
  // still holds. Same scheme one level at a time for internal nodes.
  Tree(const ParenSeq& seq, double leaf_fill = 0.75, TreeParams params = {}) : params_(params) {
    params_.check();
    if (!(leaf_fill > 0.0 && leaf_fill <= 1.0))
      fail(Errc::config_error, "leaf fill must be in (0, 1]");
    if (!seq.is_balanced()) fail(Errc::unbalanced, "build input must be balanced");
    if (seq.size() > (std::uint64_t(1) << 31))
      fail(Errc::config_error, "sequence exceeds 2^31 symbols");

    std::uint32_t cap = params_.leaf_cap;
    std::uint32_t mn = params_.leaf_min();
    std::uint32_t target = std::clamp<std::uint32_t>(std::uint32_t(leaf_fill * cap), 1, cap);
    std::uint64_t n = seq.size();
    DirectContext ctx = direct();
    if (n == 0) {
      NodeRef r = ctx.alloc_node();
      ctx.set_header({r, 1});
      return;
    }
    if (n > cap && target < mn)
      fail(Errc::config_error, "leaf fill below minimum occupancy for a multi-leaf build");

    std::vector<std::uint32_t> sizes = chop(n, target, mn, cap);
    std::vector<std::pair<NodeRef, NodeSummary>> level;
    level.reserve(sizes.size());
    std::uint64_t pos = 0;
    for (std::uint32_t sz : sizes) {
      NodeRef r = ctx.alloc_node();
      Node& leaf = store_.node(r);
      bits_copy(leaf.bits(), 0, seq.words(), std::uint32_t(pos), sz);
      leaf.summary = summarize_bits(leaf.bits(), sz);
      level.emplace_back(r, leaf.summary);
      pos += sz;
    }
    std::uint64_t height = 1;
    while (level.size() > 1) {
      std::vector<std::uint32_t> groups = chop(level.size(), kArity, kMinChildren, kArity);
      std::vector<std::pair<NodeRef, NodeSummary>> up;
      up.reserve(groups.size());
      std::size_t at = 0;
      for (std::uint32_t g : groups) {
        NodeRef r = ctx.alloc_node();
        Node& in = store_.node(r);
        in.init_internal();
        in.set_child_count(g);
        NodeSummary acc{};
        for (std::uint32_t k = 0; k < g; ++k) {
          in.slots[k] = level[at + k].first;
          acc = combine(acc, level[at + k].second);
        }
        in.summary = acc;
        up.emplace_back(r, acc);
        at += g;
      }
      level = std::move(up);
      ++height;
    }
    ctx.set_header({level[0].first, height});
  }

  Tree(const Tree&) = delete;
  Tree& operator=(const Tree&) = delete;

  static Tree build(const ParenSeq& seq, double leaf_fill = 0.75, TreeParams params = {}) {
    return Tree(seq, leaf_fill, params);
  }

  DirectContext direct(Footprint* trace = nullptr) {
    return DirectContext(store_, hdr_, params_, trace);
  }

  const TreeParams& params() const { return params_; }
  std::uint64_t height() const { return hdr_.height; }
  std::uint64_t node_count() const { return store_.live_nodes(); }

  std::uint64_t size() { DirectContext c = direct(); return ops::total_size(c); }
  bool open_at(std::uint64_t i) { DirectContext c = direct(); return ops::access(c, i); }
  std::int64_t excess_at(std::uint64_t i) { DirectContext c = direct(); return ops::excess(c, i); }
  std::optional<std::int64_t> fwd_search(std::uint64_t i, std::int64_t d) {
    DirectContext c = direct();
    return ops::fwd_search(c, i, d);
  }
  std::optional<std::int64_t> bwd_search(std::uint64_t i, std::int64_t d) {
    DirectContext c = direct();
    return ops::bwd_search(c, i, d);
  }
  std::uint64_t find_close(std::uint64_t i) { DirectContext c = direct(); return ops::find_close(c, i); }
  std::uint64_t find_open(std::uint64_t i) { DirectContext c = direct(); return ops::find_open(c, i); }
  std::optional<std::uint64_t> enclose(std::uint64_t i) {
    DirectContext c = direct();
    return ops::enclose(c, i);
  }
  std::int64_t depth_at(std::uint64_t i) { DirectContext c = direct(); return ops::depth(c, i); }
  std::uint64_t subtree_size(std::uint64_t i) {
    DirectContext c = direct();
    return ops::subtree_size(c, i);
  }
  std::pair<std::int64_t, std::uint64_t> range_min(std::uint64_t i, std::uint64_t j) {
    DirectContext c = direct();
    return ops::range_min(c, i, j);
  }
  void insert_pair(std::uint64_t i, std::uint64_t j) {
    DirectContext c = direct();
    ops::insert_pair(c, i, j);
  }
  void insert_leaf(std::uint64_t i) { DirectContext c = direct(); ops::insert_leaf(c, i); }
  void delete_pair(std::uint64_t i) { DirectContext c = direct(); ops::delete_pair(c, i); }

  ParenSeq to_paren_seq() { DirectContext c = direct(); return ops::to_paren_seq(c); }
  std::string to_string() { return to_paren_seq().to_string(); }

  // Left-to-right leaf sizes; test support for occupancy expectations.
  std::vector<std::uint32_t> leaf_sizes() const {
    std::vector<std::uint32_t> out;
    collect_leaf_sizes(hdr_.root, out);
    return out;
  }

  // Full structural check: node kinds, occupancy, uniform leaf depth, exact
  // summaries at every level, zero padding, balanced root.
  ValidationReport validate() const {
    ValidationReport rep;
    if (hdr_.root == kNullRef || !store_.valid_ref(hdr_.root)) {
      rep.violations.push_back({"", "root ref invalid"});
      return rep;
    }
    check_node(hdr_.root, 1, true, "0", rep);
    const Node& root = store_.node(hdr_.root);
    if (root.summary.num_parens > 0) {
      if (root.summary.total_excess != 0)
        rep.violations.push_back({"0", "root total excess nonzero: sequence unbalanced"});
      if (root.summary.min_excess < 0)
        rep.violations.push_back({"0", "root min excess negative: sequence unbalanced"});
    }
    return rep;
  }

 private:
  // Chop n units into chunks of `target`; a short tail below `mn` is merged
  // into the previous chunk when the result still fits `cap`, otherwise the
  // last two chunks are split ceil/floor.
  static std::vector<std::uint32_t> chop(std::uint64_t n, std::uint32_t target, std::uint32_t mn,
                                         std::uint32_t cap) {
    std::vector<std::uint32_t> sizes;
    std::uint64_t rem = n;
    while (rem > 0) {
      std::uint32_t t = std::uint32_t(std::min<std::uint64_t>(target, rem));
      sizes.push_back(t);
      rem -= t;
    }
    if (sizes.size() >= 2 && sizes.back() < mn) {
      std::uint32_t combined = sizes[sizes.size() - 2] + sizes.back();
      sizes.pop_back();
      sizes.pop_back();
      if (combined <= cap) {
        sizes.push_back(combined);
      } else {
        sizes.push_back((combined + 1) / 2);
        sizes.push_back(combined / 2);
      }
    }
    return sizes;
  }

  void collect_leaf_sizes(NodeRef r, std::vector<std::uint32_t>& out) const {
    const Node& n = store_.node(r);
    if (n.is_leaf()) {
      out.push_back(n.leaf_size());
      return;
    }
    for (std::uint32_t c = 0; c < n.child_count(); ++c) collect_leaf_sizes(n.child(c), out);
  }

  void check_node(NodeRef r, std::uint64_t depth, bool is_root, const std::string& path,
                  ValidationReport& rep) const {
    const Node& n = store_.node(r);
    if (n.is_leaf()) {
      if (depth != hdr_.height)
        rep.violations.push_back({path, "leaf at depth " + std::to_string(depth) +
                                            ", expected " + std::to_string(hdr_.height)});
      std::uint32_t sz = n.leaf_size();
      if (sz > params_.leaf_cap)
        rep.violations.push_back({path, "leaf overfull: " + std::to_string(sz)});
      if (!is_root && sz < params_.leaf_min())
        rep.violations.push_back({path, "leaf underfull: " + std::to_string(sz)});
      if (summarize_bits(n.bits(), sz) != n.summary)
        rep.violations.push_back({path, "leaf summary does not match its bits"});
      std::array<std::uint64_t, kLeafWords> padded = n.slots;
      bits_clear_from(padded.data(), kLeafWords, sz);
      if (padded != n.slots)
        rep.violations.push_back({path, "nonzero padding bits beyond leaf size"});
      return;
    }
    std::uint32_t cc = n.child_count();
    if (cc < 1 || cc > kArity) {
      rep.violations.push_back({path, "internal child count out of range: " + std::to_string(cc)});
      return;
    }
    if (!is_root && cc < kMinChildren)
      rep.violations.push_back({path, "internal underfull: " + std::to_string(cc)});
    NodeSummary acc{};
    for (std::uint32_t c = 0; c < cc; ++c) {
      NodeRef ch = n.child(c);
      if (ch == kNullRef || !store_.valid_ref(ch)) {
        rep.violations.push_back({path, "child " + std::to_string(c) + " ref invalid"});
        return;
      }
      acc = combine(acc, store_.node(ch).summary);
      check_node(ch, depth + 1, false, path + "/" + std::to_string(c), rep);
    }
    if (acc != n.summary)
      rep.violations.push_back({path, "internal summary does not match fold of children"});
  }

  TreeParams params_;
  NodeStore store_;
  VersionedHeader hdr_;

  friend class Engine;
};

}  // namespace rmmt
