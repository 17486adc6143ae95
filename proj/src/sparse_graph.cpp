#include "l2net/sparse_graph.hpp"

#include "l2net/errors.hpp"

#include <algorithm>
#include <string>

namespace l2net {

SparseGraph::SparseGraph(std::size_t n_nodes)
    : n_nodes_(n_nodes), offsets_(n_nodes + 1, 0) {}

SparseGraph::SparseGraph(std::size_t n_nodes, std::vector<GenePair> edges,
                         Duplicates duplicates)
    : n_nodes_(n_nodes), edges_(std::move(edges)) {
  for (auto &e : edges_) {
    if (e.m == e.n)
      throw InputError("InvalidParam", "self-loop on node " + std::to_string(e.m));
    if (e.m > e.n)
      std::swap(e.m, e.n);
    if (e.n >= n_nodes_)
      throw InputError("InvalidParam", "edge (" + std::to_string(e.m) + ", " +
                                           std::to_string(e.n) + ") outside " +
                                           std::to_string(n_nodes_) + " nodes");
  }
  std::sort(edges_.begin(), edges_.end());
  const auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  if (dup != edges_.end()) {
    if (duplicates == Duplicates::Reject)
      throw InputError("InvalidParam", "duplicate edge (" + std::to_string(dup->m) +
                                           ", " + std::to_string(dup->n) + ")");
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  offsets_.assign(n_nodes_ + 1, 0);
  for (const auto &e : edges_) {
    ++offsets_[e.m + 1];
    ++offsets_[e.n + 1];
  }
  for (std::size_t i = 0; i < n_nodes_; ++i)
    offsets_[i + 1] += offsets_[i];
  adjacency_.resize(2 * edges_.size());
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  // Sorted edges give ascending neighbor lists for the `m` side; the `n` side
  // receives its lower neighbors in ascending m order, before any higher one.
  for (const auto &e : edges_)
    adjacency_[fill[e.n]++] = e.m;
  for (const auto &e : edges_)
    adjacency_[fill[e.m]++] = e.n;
}

bool SparseGraph::has_edge(std::size_t a, std::size_t b) const {
  if (a >= n_nodes_ || b >= n_nodes_ || a == b)
    return false;
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), static_cast<std::uint32_t>(b));
}

double SparseGraph::sparsity() const {
  if (n_nodes_ < 2)
    return 0.0;
  const double k = static_cast<double>(n_nodes_) * (n_nodes_ - 1) / 2.0;
  return static_cast<double>(edges_.size()) / k;
}

} // namespace l2net
