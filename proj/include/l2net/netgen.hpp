#pragma once

#include "l2net/expr_io.hpp"
#include "l2net/sparse_graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace l2net {

enum class Family {
  Complete,
  Ar,
  TwoBlocks,
  TwoNegBlocks,
  Random,
  Hub,
  Band,
  ScaleFree,
  OverlappedCluster,
};

std::string family_name(Family f);
/// Throws InputError("InvalidParam") for an unknown name.
Family parse_family(const std::string &name);

/// Families whose edge weights are drawn from the L2N mixture and mapped to a
/// covariance through tanh; the others build a precision matrix from A.
bool is_l2n_family(Family f);

/// Declarative description of one synthetic network experiment.
struct NetworkConfig {
  Family family = Family::Complete;
  std::size_t n_genes = 500;
  int n_samples = 100;

  /// Block (clique) size for complete, ar, two_blocks, two_neg_blocks.
  std::size_t block_size = 100;
  /// Edge probability for random and overlapped_cluster.
  double edge_prob = 0.01;
  /// Group count (hub, overlapped_cluster) or bandwidth (band).
  std::size_t groups = 100;

  double v = 0.3;
  double u = 0.1;

  double theta1 = -0.25;
  double kappa1_sq = 0.25;
  double theta2 = -0.25;
  double kappa2_sq = 0.25;
  /// Standard deviation of null weights, on the raw Fisher-z scale.
  double null_sd = 1.0;

  /// Barabasi-Albert: edges per arriving node and size of the seed clique.
  std::size_t ba_edges_per_node = 1;
  std::size_t ba_seed_size = 2;

  std::uint64_t seed = 1;
  /// Genes used for fitting; 0 means all of them.
  std::size_t g_prime = 0;

  /// Throws InputError("InvalidParam") naming the violated constraint.
  void validate() const;
};

struct GroundTruth {
  SparseGraph adjacency;
  /// Unit-diagonal covariance; empty until a covariance step fills it.
  Eigen::MatrixXd true_cov;
  double sparsity = 0.0;
};

/// Node ranges [begin, end) of the overlapped-cluster groups.
std::vector<std::pair<std::size_t, std::size_t>>
overlapped_cluster_groups(const NetworkConfig &config);

GroundTruth gen_adjacency(const NetworkConfig &config, std::mt19937_64 &rng);

/// Dense symmetric weight matrix with zero diagonal.
///
/// Null pairs get N(0, null_sd^2). Non-null pairs get a LogNormal draw whose
/// sign is negative only for the cross-block pairs of two_neg_blocks. For ar
/// the sorted draws fill the off-diagonal bands of the block in decreasing
/// order, shuffled within each band.
Eigen::MatrixXd gen_weights_l2n(const NetworkConfig &config, const GroundTruth &truth,
                                std::mt19937_64 &rng);

struct CovRepair {
  Eigen::MatrixXd cov;
  int passes = 0;
  double max_change = 0.0;
};

inline constexpr double kEigenClip = 1e-6;
inline constexpr int kMaxRepairPasses = 100;

/// tanh(W) with unit diagonal, made positive definite by eigenvalue clipping
/// at kEigenClip and rescaling to unit diagonal. Throws
/// NumericError("RepairFailed") when kMaxRepairPasses are not enough.
CovRepair weights_to_cov(const Eigen::MatrixXd &weights);

/// Precision matrix v*A off the diagonal and |lambda_min(v*A)| + 0.1 + u on
/// it.
Eigen::MatrixXd adjacency_to_precision(const SparseGraph &adjacency, double v, double u);

/// Inverse of adjacency_to_precision rescaled to unit diagonal.
Eigen::MatrixXd adjacency_to_cov(const SparseGraph &adjacency, double v, double u);

/// `n_samples` draws of N(0, cov) through the Cholesky factor; genes are
/// rows. Throws NumericError("NotPositiveDefinite").
ExpressionMatrix sample_mvn(const Eigen::MatrixXd &cov, int n_samples, std::mt19937_64 &rng);

/// The round(target_sparsity * K) pairs with the largest |cov|, ties broken
/// by pair order.
SparseGraph truth_by_cov_threshold(const Eigen::MatrixXd &cov, double target_sparsity);

std::vector<std::string> default_gene_ids(std::size_t n_genes);

struct SimulatedData {
  GroundTruth truth;
  ExpressionMatrix expr;
};

/// Adjacency, covariance and expression data from one RNG seeded with
/// `config.seed`.
SimulatedData simulate(const NetworkConfig &config);

} // namespace l2net
