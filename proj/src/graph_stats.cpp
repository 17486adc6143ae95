#include "l2net/graph_stats.hpp"

#include "l2net/errors.hpp"
#include "l2net/expr_io.hpp"
#include "l2net/parallel.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

namespace l2net {

namespace {

void check_node(const SparseGraph &graph, std::size_t node) {
  if (node >= graph.n_nodes())
    throw InputError("InvalidParam", "node " + std::to_string(node) + " outside graph of " +
                                         std::to_string(graph.n_nodes()) + " nodes");
}

std::size_t sorted_intersection_size(std::span<const std::uint32_t> x,
                                     std::span<const std::uint32_t> y) {
  std::size_t count = 0;
  auto i = x.begin();
  auto j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

} // namespace

std::size_t degree(const SparseGraph &graph, std::size_t node) {
  check_node(graph, node);
  return graph.degree(node);
}

double clustering_coeff(const SparseGraph &graph, std::size_t node) {
  check_node(graph, node);
  const auto nbrs = graph.neighbors(node);
  const std::size_t d = nbrs.size();
  if (d <= 1)
    return 0.0;
  // Each neighbor-neighbor edge is seen from both endpoints.
  std::size_t twice_links = 0;
  for (std::uint32_t v : nbrs)
    twice_links += sorted_intersection_size(nbrs, graph.neighbors(v));
  return static_cast<double>(twice_links) / (static_cast<double>(d) * (d - 1));
}

std::vector<NodeStats> stats_table(const SparseGraph &graph, unsigned threads) {
  std::vector<NodeStats> rows(graph.n_nodes());
  parallel_for(rows.size(), threads, [&](std::size_t node) {
    NodeStats &r = rows[node];
    r.node = node;
    r.degree = graph.degree(node);
    r.clustering = clustering_coeff(graph, node);
    r.gamma_d = r.clustering * static_cast<double>(r.degree);
  });
  return rows;
}

void write_stats_table(std::span<const NodeStats> rows,
                       const std::vector<std::string> &gene_ids,
                       const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << "node\tgene_id\tdegree\tclustering\tgamma_d\n";
  for (const auto &r : rows) {
    const std::string id = r.node < gene_ids.size() ? gene_ids[r.node] : std::to_string(r.node);
    out << r.node << '\t' << id << '\t' << r.degree << '\t' << format_double(r.clustering)
        << '\t' << format_double(r.gamma_d) << '\n';
  }
  if (!out)
    throw IoError("write failed for " + path.string());
}

std::vector<std::size_t> symmetric_difference_nodes(const SparseGraph &a,
                                                    const SparseGraph &b) {
  if (a.n_nodes() != b.n_nodes())
    throw InputError("NodeSetMismatch", "graphs have " + std::to_string(a.n_nodes()) +
                                            " and " + std::to_string(b.n_nodes()) + " nodes");
  std::vector<std::size_t> out;
  for (std::size_t node = 0; node < a.n_nodes(); ++node) {
    const auto x = a.neighbors(node);
    const auto y = b.neighbors(node);
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end()))
      out.push_back(node);
  }
  return out;
}

std::vector<std::size_t> bitmap_order(const SparseGraph &reference) {
  const std::size_t n = reference.n_nodes();
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  std::map<std::size_t, std::size_t> votes;
  for (std::size_t node = 0; node < n; ++node) {
    const auto nbrs = reference.neighbors(node);
    if (nbrs.empty())
      continue;
    votes.clear();
    for (std::uint32_t v : nbrs)
      ++votes[label[v]];
    // Most frequent neighbor label; the map order makes ties go to the
    // smallest label.
    std::size_t best = label[node];
    std::size_t best_votes = 0;
    for (const auto &[l, c] : votes)
      if (c > best_votes) {
        best = l;
        best_votes = c;
      }
    label[node] = best;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (label[x] != label[y])
      return label[x] < label[y];
    if (reference.degree(x) != reference.degree(y))
      return reference.degree(x) > reference.degree(y);
    return x < y;
  });
  return order;
}

void write_pbm(const SparseGraph &graph, std::span<const std::size_t> order,
               const std::filesystem::path &path) {
  const std::size_t n = graph.n_nodes();
  if (order.size() != n)
    throw InputError("InvalidParam", "bitmap order does not cover every node");
  std::vector<std::size_t> position(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (order[i] >= n || position[order[i]] != n)
      throw InputError("InvalidParam", "bitmap order is not a permutation");
    position[order[i]] = i;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << "P4\n" << n << ' ' << n << '\n';
  const std::size_t row_bytes = (n + 7) / 8;
  std::vector<unsigned char> row(row_bytes);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(row.begin(), row.end(), 0);
    for (std::uint32_t v : graph.neighbors(order[i])) {
      const std::size_t col = position[v];
      row[col / 8] |= static_cast<unsigned char>(0x80u >> (col % 8));
    }
    out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(row_bytes));
  }
  if (!out)
    throw IoError("write failed for " + path.string());
}

} // namespace l2net
