#pragma once

#include "l2net/expr_io.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace l2net {

/// Parameters of the three-component L2N mixture:
///   w | null      ~ N(0, 1/(N-3) + sigma0_sq)
///   w | positive  ~ LogNormal(theta1, kappa1_sq)      on w > 0
///  -w | negative  ~ LogNormal(theta2, kappa2_sq)      on w < 0
struct L2NParams {
  double p0 = 1.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double sigma0_sq = 0.0;
  double theta1 = 0.0;
  double kappa1_sq = 1.0;
  double theta2 = 0.0;
  double kappa2_sq = 1.0;
  int n_samples = 100;

  /// 1/(N-3), the sampling variance of a Fisher-z weight.
  double sampling_variance() const { return 1.0 / (n_samples - 3.0); }
  double null_variance() const { return sampling_variance() + sigma0_sq; }

  /// Throws InputError("InvalidParam") when an invariant is violated.
  void validate() const;

  friend bool operator==(const L2NParams &, const L2NParams &) = default;
};

double density_null(double w, const L2NParams &params);
double density_pos(double w, const L2NParams &params);
double density_neg(double w, const L2NParams &params);
double mixture_density(double w, const L2NParams &params);

inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr int kDefaultMaxIter = 1000;
inline constexpr double kKappaFloor = 1e-6;
inline constexpr int kDefaultRmseBins = 100;

struct FitOptions {
  double tol = kDefaultTolerance;
  int max_iter = kDefaultMaxIter;
  /// Starting point; the percentile-seeded initializer is used when absent.
  std::optional<L2NParams> init;
  /// Extra runs from jittered starting points; the highest final
  /// log-likelihood wins.
  int restarts = 0;
  std::uint64_t restart_seed = 0;
  int rmse_bins = kDefaultRmseBins;
};

struct FitReport {
  L2NParams params;
  std::vector<double> loglik_trace;
  int n_iterations = 0;
  double rmse = 0.0;
  std::uint64_t subsample_seed = 0;
  std::size_t subsample_size = 0;
  /// Non-fatal conditions, e.g. "DegenerateComponent(negative)".
  std::vector<std::string> warnings;

  double final_loglik() const {
    return loglik_trace.empty() ? 0.0 : loglik_trace.back();
  }
};

/// Deterministic starting point: weights above the 95th percentile of |w|
/// seed the non-null components (split by sign), the central half of the
/// weights sets sigma0_sq.
L2NParams initial_params(std::span<const double> weights, int n_samples);

/// Observed-data log-likelihood of the mixture.
double log_likelihood(std::span<const double> weights, const L2NParams &params);

/// Fits the mixture by EM. Stops when the relative change of the
/// log-likelihood drops below `tol` or after `max_iter` M-steps.
FitReport em_fit(std::span<const double> weights, int n_samples,
                 const FitOptions &options = {});

/// Fits on the pairs among `g_prime` genes drawn uniformly (without
/// replacement) using `seed`.
FitReport fit_subsampled(const ExpressionMatrix &expr, std::size_t g_prime,
                         std::uint64_t seed, const FitOptions &options = {},
                         unsigned threads = 1);

/// Indices of the genes fit_subsampled uses, ascending.
std::vector<std::size_t> subsample_genes(std::size_t n_genes, std::size_t g_prime,
                                         std::uint64_t seed);

/// Root mean squared difference between the equal-width histogram density of
/// `weights` and the mixture density at the bin midpoints.
double rmse_fit(std::span<const double> weights, const L2NParams &params,
                int n_bins = kDefaultRmseBins);

} // namespace l2net
