#include "l2net/netgen.hpp"

#include "l2net/corr_engine.hpp"
#include "l2net/errors.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

namespace l2net {

namespace {

struct FamilyName {
  Family family;
  const char *name;
};

constexpr FamilyName kFamilies[] = {
    {Family::Complete, "complete"},
    {Family::Ar, "ar"},
    {Family::TwoBlocks, "two_blocks"},
    {Family::TwoNegBlocks, "two_neg_blocks"},
    {Family::Random, "random"},
    {Family::Hub, "hub"},
    {Family::Band, "band"},
    {Family::ScaleFree, "scale_free"},
    {Family::OverlappedCluster, "overlapped_cluster"},
};

[[noreturn]] void invalid(const std::string &what) { throw InputError("InvalidParam", what); }

void add_clique(std::vector<GenePair> &edges, std::size_t begin, std::size_t end) {
  for (std::size_t a = begin; a < end; ++a)
    for (std::size_t b = a + 1; b < end; ++b)
      edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
}

std::vector<GenePair> hub_edges(std::size_t n, std::size_t groups) {
  // Group sizes differ by at most one; the first node of a group is its hub.
  std::vector<GenePair> edges;
  const std::size_t small = n / groups;
  const std::size_t large_count = n % groups;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < groups; ++k) {
    const std::size_t size = small + (k < groups - large_count ? 0 : 1);
    for (std::size_t j = begin + 1; j < begin + size; ++j)
      edges.push_back({static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(j)});
    begin += size;
  }
  return edges;
}

std::vector<GenePair> barabasi_albert(std::size_t n, std::size_t per_node, std::size_t seed_size,
                                      std::mt19937_64 &rng) {
  std::vector<GenePair> edges;
  add_clique(edges, 0, seed_size);
  // Each node appears once per incident edge, so a uniform draw from this
  // list is a degree-proportional draw.
  std::vector<std::uint32_t> endpoints;
  for (const auto &e : edges) {
    endpoints.push_back(e.m);
    endpoints.push_back(e.n);
  }
  std::vector<std::uint32_t> chosen;
  for (std::size_t t = seed_size; t < n; ++t) {
    chosen.clear();
    std::uniform_int_distribution<std::size_t> pick(0, endpoints.size() - 1);
    while (chosen.size() < per_node) {
      const std::uint32_t target = endpoints[pick(rng)];
      if (std::find(chosen.begin(), chosen.end(), target) == chosen.end())
        chosen.push_back(target);
    }
    for (std::uint32_t target : chosen) {
      edges.push_back({target, static_cast<std::uint32_t>(t)});
      endpoints.push_back(target);
      endpoints.push_back(static_cast<std::uint32_t>(t));
    }
  }
  return edges;
}

/// Sign of a non-null weight: cross-block pairs of two_neg_blocks are negative.
int edge_sign(const NetworkConfig &config, std::size_t a, std::size_t b) {
  if (config.family != Family::TwoNegBlocks)
    return 1;
  return a / config.block_size == b / config.block_size ? 1 : -1;
}

Eigen::MatrixXd cov_to_cor(const Eigen::MatrixXd &cov) {
  const Eigen::VectorXd inv_sd = cov.diagonal().array().sqrt().inverse();
  const Eigen::MatrixXd scaled = inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
  // Exactly symmetric even when `cov` carries rounding asymmetry.
  Eigen::MatrixXd cor = 0.5 * (scaled + scaled.transpose());
  cor.diagonal().setOnes();
  return cor;
}

} // namespace

std::string family_name(Family f) {
  for (const auto &entry : kFamilies)
    if (entry.family == f)
      return entry.name;
  return "complete";
}

Family parse_family(const std::string &name) {
  for (const auto &entry : kFamilies)
    if (name == entry.name)
      return entry.family;
  invalid("unknown network family '" + name + "'");
}

bool is_l2n_family(Family f) {
  return f == Family::Complete || f == Family::Ar || f == Family::TwoBlocks ||
         f == Family::TwoNegBlocks;
}

void NetworkConfig::validate() const {
  if (n_genes < 2)
    invalid("n_genes must be at least 2");
  if (n_genes > std::numeric_limits<std::uint32_t>::max())
    invalid("n_genes exceeds the 32-bit node index range");
  if (n_samples < 4)
    invalid("n_samples must be at least 4");
  if (g_prime != 0 && (g_prime < 2 || g_prime > n_genes))
    invalid("g_prime must be 0 (all genes) or lie in [2, n_genes]");
  switch (family) {
  case Family::Complete:
  case Family::Ar:
    if (block_size < 2 || block_size > n_genes)
      invalid("block_size must lie in [2, n_genes]");
    break;
  case Family::TwoBlocks:
  case Family::TwoNegBlocks:
    if (block_size < 2 || 2 * block_size > n_genes)
      invalid("block_size must lie in [2, n_genes / 2]");
    break;
  case Family::Random:
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
      invalid("edge_prob must lie in [0, 1]");
    break;
  case Family::Hub:
    if (groups < 1 || n_genes / groups < 2)
      invalid("hub groups must be at least 1 and hold at least 2 nodes each");
    break;
  case Family::Band:
    if (groups < 1 || groups >= n_genes)
      invalid("band width must lie in [1, n_genes - 1]");
    break;
  case Family::ScaleFree:
    if (ba_edges_per_node < 1)
      invalid("ba_edges_per_node must be at least 1");
    if (ba_seed_size < 2 || ba_seed_size < ba_edges_per_node || ba_seed_size > n_genes)
      invalid("ba_seed_size must lie in [max(2, ba_edges_per_node), n_genes]");
    break;
  case Family::OverlappedCluster:
    if (groups < 1 || n_genes / groups < 2)
      invalid("overlapped_cluster groups must hold at least 2 nodes each");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
      invalid("edge_prob must lie in [0, 1]");
    break;
  }
  if (is_l2n_family(family)) {
    if (!(kappa1_sq > 0.0) || !(kappa2_sq > 0.0))
      invalid("kappa1_sq and kappa2_sq must be positive");
    if (!std::isfinite(theta1) || !std::isfinite(theta2))
      invalid("theta1 and theta2 must be finite");
    if (!(null_sd >= 0.0) || !std::isfinite(null_sd))
      invalid("null_sd must be finite and nonnegative");
  } else if (!(v > 0.0) || !(u > 0.0)) {
    invalid("v and u must be positive");
  }
}

std::vector<std::pair<std::size_t, std::size_t>>
overlapped_cluster_groups(const NetworkConfig &config) {
  const std::size_t size = config.n_genes / config.groups;
  const std::size_t shared = size / 5;
  const std::size_t stride = size - shared;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < config.groups; ++k)
    out.emplace_back(k * stride, k * stride + size);
  return out;
}

GroundTruth gen_adjacency(const NetworkConfig &config, std::mt19937_64 &rng) {
  config.validate();
  const std::size_t n = config.n_genes;
  const std::size_t s = config.block_size;
  std::vector<GenePair> edges;
  auto merge = SparseGraph::Duplicates::Reject;

  switch (config.family) {
  case Family::Complete:
  case Family::Ar:
    add_clique(edges, 0, s);
    break;
  case Family::TwoBlocks:
    add_clique(edges, 0, s);
    add_clique(edges, s, 2 * s);
    break;
  case Family::TwoNegBlocks:
    add_clique(edges, 0, 2 * s);
    break;
  case Family::Random: {
    std::bernoulli_distribution coin(config.edge_prob);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b)
        if (coin(rng))
          edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
    break;
  }
  case Family::Hub:
    edges = hub_edges(n, config.groups);
    break;
  case Family::Band:
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n && b - a <= config.groups; ++b)
        edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
    break;
  case Family::ScaleFree:
    edges = barabasi_albert(n, config.ba_edges_per_node, config.ba_seed_size, rng);
    break;
  case Family::OverlappedCluster: {
    std::bernoulli_distribution coin(config.edge_prob);
    for (const auto &[begin, end] : overlapped_cluster_groups(config))
      for (std::size_t a = begin; a < end; ++a)
        for (std::size_t b = a + 1; b < end; ++b)
          if (coin(rng))
            edges.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
    merge = SparseGraph::Duplicates::Merge;
    break;
  }
  }

  GroundTruth truth;
  truth.adjacency = SparseGraph(n, std::move(edges), merge);
  truth.sparsity = truth.adjacency.sparsity();
  return truth;
}

Eigen::MatrixXd gen_weights_l2n(const NetworkConfig &config, const GroundTruth &truth,
                                std::mt19937_64 &rng) {
  if (!is_l2n_family(config.family))
    invalid("gen_weights_l2n needs one of complete, ar, two_blocks, two_neg_blocks");
  const std::size_t n = config.n_genes;
  if (truth.adjacency.n_nodes() != n)
    invalid("ground truth does not match n_genes");
  std::normal_distribution<double> null_draw(0.0, config.null_sd);
  std::lognormal_distribution<double> pos_draw(config.theta1, std::sqrt(config.kappa1_sq));
  std::lognormal_distribution<double> neg_draw(config.theta2, std::sqrt(config.kappa2_sq));

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (!truth.adjacency.has_edge(a, b))
        w(a, b) = null_draw(rng);

  if (config.family == Family::Ar) {
    const std::size_t s = config.block_size;
    std::vector<double> draws(pair_count(s));
    for (double &d : draws)
      d = pos_draw(rng);
    std::sort(draws.begin(), draws.end(), std::greater<>());
    std::size_t next = 0;
    for (std::size_t lag = 1; lag < s; ++lag) {
      std::vector<double> band(draws.begin() + next, draws.begin() + next + (s - lag));
      next += s - lag;
      std::shuffle(band.begin(), band.end(), rng);
      for (std::size_t a = 0; a + lag < s; ++a)
        w(a, a + lag) = band[a];
    }
  } else {
    for (const auto &e : truth.adjacency.edges()) {
      const int sign = edge_sign(config, e.m, e.n);
      w(e.m, e.n) = sign > 0 ? pos_draw(rng) : -neg_draw(rng);
    }
  }
  w.triangularView<Eigen::StrictlyLower>() = w.transpose();
  return w;
}

CovRepair weights_to_cov(const Eigen::MatrixXd &weights) {
  if (weights.rows() != weights.cols())
    invalid("weight matrix must be square");
  const Eigen::MatrixXd original = [&] {
    Eigen::MatrixXd r = weights.array().tanh().matrix();
    r.diagonal().setOnes();
    return r;
  }();

  CovRepair out;
  out.cov = original;
  for (; out.passes <= kMaxRepairPasses; ++out.passes) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.cov);
    if (es.info() != Eigen::Success)
      throw NumericError("RepairFailed", "eigen-decomposition did not converge");
    if (es.eigenvalues().minCoeff() >= 0.1 * kEigenClip) {
      out.max_change = (out.cov - original).cwiseAbs().maxCoeff();
      return out;
    }
    if (out.passes == kMaxRepairPasses)
      break;
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(kEigenClip);
    const Eigen::MatrixXd &v = es.eigenvectors();
    out.cov = cov_to_cor(v * clipped.asDiagonal() * v.transpose());
  }
  throw NumericError("RepairFailed", "positive-definite repair did not converge in " +
                                         std::to_string(kMaxRepairPasses) + " passes");
}

Eigen::MatrixXd adjacency_to_precision(const SparseGraph &adjacency, double v, double u) {
  if (!(v > 0.0) || !(u > 0.0))
    invalid("v and u must be positive");
  const std::size_t n = adjacency.n_nodes();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
  for (const auto &e : adjacency.edges()) {
    omega(e.m, e.n) = v;
    omega(e.n, e.m) = v;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("NotPositiveDefinite", "eigenvalues of the precision matrix failed");
  omega.diagonal().setConstant(std::abs(es.eigenvalues().minCoeff()) + 0.1 + u);
  return omega;
}

Eigen::MatrixXd adjacency_to_cov(const SparseGraph &adjacency, double v, double u) {
  const Eigen::MatrixXd omega = adjacency_to_precision(adjacency, v, u);
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw NumericError("NotPositiveDefinite", "precision matrix is not positive definite");
  const Eigen::MatrixXd sigma =
      llt.solve(Eigen::MatrixXd::Identity(omega.rows(), omega.cols()));
  return cov_to_cor(0.5 * (sigma + sigma.transpose()));
}

std::vector<std::string> default_gene_ids(std::size_t n_genes) {
  std::vector<std::string> ids;
  ids.reserve(n_genes);
  for (std::size_t i = 0; i < n_genes; ++i)
    ids.push_back("g" + std::to_string(i + 1));
  return ids;
}

ExpressionMatrix sample_mvn(const Eigen::MatrixXd &cov, int n_samples, std::mt19937_64 &rng) {
  if (n_samples < 4)
    throw InputError("TooFewSamples", "need at least 4 samples");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericError("NotPositiveDefinite", "covariance matrix is not positive definite");
  const auto g = static_cast<Eigen::Index>(cov.rows());
  Eigen::MatrixXd z(g, n_samples);
  std::normal_distribution<double> std_normal;
  for (Eigen::Index j = 0; j < n_samples; ++j)
    for (Eigen::Index i = 0; i < g; ++i)
      z(i, j) = std_normal(rng);
  const Eigen::MatrixXd x = llt.matrixL() * z;

  std::vector<double> values(static_cast<std::size_t>(g) * n_samples);
  for (Eigen::Index i = 0; i < g; ++i)
    for (Eigen::Index j = 0; j < n_samples; ++j)
      values[i * n_samples + j] = x(i, j);
  std::vector<std::string> samples;
  for (int j = 0; j < n_samples; ++j)
    samples.push_back("s" + std::to_string(j + 1));
  return ExpressionMatrix(default_gene_ids(g), std::move(samples), std::move(values));
}

SparseGraph truth_by_cov_threshold(const Eigen::MatrixXd &cov, double target_sparsity) {
  if (!(target_sparsity > 0.0 && target_sparsity <= 1.0))
    invalid("target sparsity must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(cov.rows());
  const std::uint64_t k = pair_count(n);
  const auto keep = static_cast<std::size_t>(std::llround(target_sparsity * k));

  std::vector<std::uint64_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> magnitude(k);
  for (std::size_t a = 0, idx = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b, ++idx)
      magnitude[idx] = std::abs(cov(a, b));
  auto stronger = [&](std::uint64_t x, std::uint64_t y) {
    return magnitude[x] != magnitude[y] ? magnitude[x] > magnitude[y] : x < y;
  };
  std::nth_element(order.begin(), order.begin() + keep, order.end(), stronger);
  order.resize(keep);

  std::vector<GenePair> edges;
  edges.reserve(keep);
  for (std::uint64_t idx : order)
    edges.push_back(pair_at(n, idx));
  return SparseGraph(n, std::move(edges));
}

SimulatedData simulate(const NetworkConfig &config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  SimulatedData out;
  out.truth = gen_adjacency(config, rng);
  if (is_l2n_family(config.family))
    out.truth.true_cov = weights_to_cov(gen_weights_l2n(config, out.truth, rng)).cov;
  else
    out.truth.true_cov = adjacency_to_cov(out.truth.adjacency, config.v, config.u);
  out.expr = sample_mvn(out.truth.true_cov, config.n_samples, rng);
  return out;
}

} // namespace l2net
