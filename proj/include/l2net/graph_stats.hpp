#pragma once

#include "l2net/sparse_graph.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace l2net {

struct NodeStats {
  std::size_t node = 0;
  std::size_t degree = 0;
  /// Fraction of neighbor pairs that are adjacent; 0 when degree <= 1.
  double clustering = 0.0;
  double gamma_d = 0.0;
};

std::size_t degree(const SparseGraph &graph, std::size_t node);

/// Counts neighbor-pair edges by merging sorted neighbor lists.
double clustering_coeff(const SparseGraph &graph, std::size_t node);

std::vector<NodeStats> stats_table(const SparseGraph &graph, unsigned threads = 1);

/// TSV with columns node, gene_id, degree, clustering, gamma_d.
void write_stats_table(std::span<const NodeStats> rows,
                       const std::vector<std::string> &gene_ids,
                       const std::filesystem::path &path);

/// Nodes whose neighbor sets differ, ascending. Throws
/// InputError("NodeSetMismatch") when the node counts differ.
std::vector<std::size_t> symmetric_difference_nodes(const SparseGraph &a,
                                                    const SparseGraph &b);

/// Permutation grouping densely connected nodes: sorted by label from one
/// in-order pass of label propagation, then degree descending, then index.
std::vector<std::size_t> bitmap_order(const SparseGraph &reference);

/// Binary PBM (P4) of the adjacency matrix with rows and columns permuted by
/// `order`; a set bit is an edge.
void write_pbm(const SparseGraph &graph, std::span<const std::size_t> order,
               const std::filesystem::path &path);

} // namespace l2net
