#pragma once

#include "l2net/gene_pair.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace l2net {

/// Undirected simple graph over nodes 0..n-1.
///
/// Edges are kept sorted with m < n; neighbor lists are stored sorted in a
/// compressed (offset + flat array) layout so that neighbor-set intersection
/// is linear in the two degrees. Immutable after construction.
class SparseGraph {
public:
  enum class Duplicates { Reject, Merge };

  explicit SparseGraph(std::size_t n_nodes = 0);

  /// Throws InputError("InvalidParam") on self-loops or out-of-range nodes,
  /// and on repeated edges unless `duplicates == Merge`. Pair orientation in
  /// the input does not matter.
  SparseGraph(std::size_t n_nodes, std::vector<GenePair> edges,
              Duplicates duplicates = Duplicates::Reject);

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  const std::vector<GenePair> &edges() const noexcept { return edges_; }

  std::span<const std::uint32_t> neighbors(std::size_t node) const {
    return {adjacency_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
  }
  std::size_t degree(std::size_t node) const {
    return offsets_[node + 1] - offsets_[node];
  }
  bool has_edge(std::size_t a, std::size_t b) const;

  /// |E| / (n(n-1)/2); 0 for graphs with fewer than two nodes.
  double sparsity() const;

  friend bool operator==(const SparseGraph &x, const SparseGraph &y) {
    return x.n_nodes_ == y.n_nodes_ && x.edges_ == y.edges_;
  }

private:
  std::size_t n_nodes_;
  std::vector<GenePair> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> adjacency_;
};

} // namespace l2net
