#pragma once

#include <cstdint>
#include <vector>

#include "rmmt/node.hpp"

namespace rmmt {

struct TreeHeader {
  NodeRef root = kNullRef;
  std::uint64_t height = 0;
};

// Optional trace of which nodes an operation touched; tests use it to reason
// about conflict footprints.
struct Footprint {
  std::vector<NodeRef> reads;
  std::vector<NodeRef> writes;
  std::vector<NodeRef> allocs;
  std::vector<NodeRef> frees;

  void clear() {
    reads.clear();
    writes.clear();
    allocs.clear();
    frees.clear();
  }
};

// Plain in-place access. Safe when the caller holds an exclusive/shared lock
// over the tree or is single-threaded; the tree algorithms are templated over
// this so the same code also runs under transactional contexts.
class DirectContext {
 public:
  DirectContext(NodeStore& store, VersionedHeader& hdr, const TreeParams& params,
                Footprint* trace = nullptr)
      : store_(&store), hdr_(&hdr), params_(&params), trace_(trace) {}

  const Node& read(NodeRef r) {
    if (trace_) trace_->reads.push_back(r);
    return store_->node(r);
  }

  Node& write(NodeRef r) {
    if (trace_) trace_->writes.push_back(r);
    return store_->node(r);
  }

  NodeRef alloc_node() {
    NodeRef r = store_->alloc();
    store_->node(r).init_leaf();
    if (trace_) trace_->allocs.push_back(r);
    return r;
  }

  void free_node(NodeRef r) {
    if (trace_) trace_->frees.push_back(r);
    store_->free_node(r);
  }

  TreeHeader header() const { return {hdr_->root, hdr_->height}; }

  void set_header(TreeHeader h) {
    hdr_->root = h.root;
    hdr_->height = h.height;
  }

  const TreeParams& params() const { return *params_; }

 private:
  NodeStore* store_;
  VersionedHeader* hdr_;
  const TreeParams* params_;
  Footprint* trace_;
};

}  // namespace rmmt
