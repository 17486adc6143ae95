#include "l2net/l2n_mixture.hpp"

#include "l2net/corr_engine.hpp"
#include "l2net/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace l2net {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neginf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double lognormal_pdf(double x, double theta, double kappa_sq) {
  if (!(x > 0.0))
    return 0.0;
  const double d = std::log(x) - theta;
  return std::exp(-0.5 * d * d / kappa_sq) / (x * std::sqrt(2.0 * M_PI * kappa_sq));
}

/// Type-7 (linear interpolation) sample quantile of already sorted data.
double sorted_quantile(const std::vector<double> &sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct LogMoments {
  double mean = 0.0;
  double var = 0.0;
};

LogMoments log_moments(const std::vector<double> &magnitudes) {
  LogMoments m;
  for (double v : magnitudes)
    m.mean += std::log(v);
  m.mean /= static_cast<double>(magnitudes.size());
  for (double v : magnitudes) {
    const double d = std::log(v) - m.mean;
    m.var += d * d;
  }
  m.var /= static_cast<double>(magnitudes.size());
  return m;
}

/// Sufficient statistics of one E-step. Log-normal moments are accumulated
/// around the current location so the variance update stays well conditioned.
struct EStep {
  double loglik = 0.0;
  double s0 = 0.0;
  double s0_w2 = 0.0;
  double s1 = 0.0;
  double s1_dl = 0.0;
  double s1_dl2 = 0.0;
  double s2 = 0.0;
  double s2_dl = 0.0;
  double s2_dl2 = 0.0;
};

/// Posterior split between the null term `a` and one log-normal term `b`
/// (both on the log scale). Returns log(e^a + e^b); `g_null`/`g_alt` receive
/// the two posteriors.
inline double split_two(double a, double b, double &g_null, double &g_alt) {
  if (a >= b) {
    const double e = std::exp(b - a);
    g_null = 1.0 / (1.0 + e);
    g_alt = e * g_null;
    return a + std::log1p(e);
  }
  const double e = std::exp(a - b);
  g_alt = 1.0 / (1.0 + e);
  g_null = e * g_alt;
  return b + std::log1p(e);
}

struct Prepared {
  std::span<const double> w;
  std::vector<double> log_abs;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

Prepared prepare(std::span<const double> weights) {
  Prepared prep;
  prep.w = weights;
  prep.log_abs.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w))
      throw NumericError("NonFinite", "weight " + std::to_string(i) + " is not finite");
    if (w > 0.0)
      ++prep.n_pos;
    else if (w < 0.0)
      ++prep.n_neg;
    prep.log_abs[i] = w != 0.0 ? std::log(std::abs(w)) : 0.0;
  }
  return prep;
}

EStep e_step(const Prepared &prep, const L2NParams &p) {
  const double v = p.null_variance();
  const double c0 = log_or_neginf(p.p0) - 0.5 * (kLog2Pi + std::log(v));
  const double half_inv_v = 0.5 / v;
  const double c1 = log_or_neginf(p.p1) - 0.5 * (kLog2Pi + std::log(p.kappa1_sq));
  const double half_inv_k1 = 0.5 / p.kappa1_sq;
  const double c2 = log_or_neginf(p.p2) - 0.5 * (kLog2Pi + std::log(p.kappa2_sq));
  const double half_inv_k2 = 0.5 / p.kappa2_sq;
  const bool use1 = p.p1 > 0.0;
  const bool use2 = p.p2 > 0.0;

  EStep s;
  const std::size_t n = prep.w.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = prep.w[i];
    const double a = c0 - w * w * half_inv_v;
    double g0 = 1.0;
    double g = 0.0;
    double lse = a;
    if (w > 0.0 && use1) {
      const double l = prep.log_abs[i];
      const double d = l - p.theta1;
      const double b = c1 - l - d * d * half_inv_k1;
      lse = split_two(a, b, g0, g);
      s.s1 += g;
      s.s1_dl += g * d;
      s.s1_dl2 += g * d * d;
    } else if (w < 0.0 && use2) {
      const double l = prep.log_abs[i];
      const double d = l - p.theta2;
      const double b = c2 - l - d * d * half_inv_k2;
      lse = split_two(a, b, g0, g);
      s.s2 += g;
      s.s2_dl += g * d;
      s.s2_dl2 += g * d * d;
    }
    s.loglik += lse;
    s.s0 += g0;
    s.s0_w2 += g0 * w * w;
  }
  return s;
}

L2NParams m_step(const EStep &s, const L2NParams &old, std::size_t n) {
  L2NParams p = old;
  const double total = static_cast<double>(n);
  p.p1 = s.s1 / total;
  p.p2 = s.s2 / total;
  p.p0 = 1.0 - p.p1 - p.p2;
  if (s.s1 > 0.0) {
    const double shift = s.s1_dl / s.s1;
    p.theta1 = old.theta1 + shift;
    p.kappa1_sq = std::max(kKappaFloor, s.s1_dl2 / s.s1 - shift * shift);
  }
  if (s.s2 > 0.0) {
    const double shift = s.s2_dl / s.s2;
    p.theta2 = old.theta2 + shift;
    p.kappa2_sq = std::max(kKappaFloor, s.s2_dl2 / s.s2 - shift * shift);
  }
  if (s.s0 > 0.0)
    p.sigma0_sq = std::max(0.0, s.s0_w2 / s.s0 - old.sampling_variance());
  return p;
}

/// Pins the component of an empty side to zero and renormalizes.
L2NParams pin_empty_sides(L2NParams p, const Prepared &prep) {
  if (prep.n_pos == 0)
    p.p1 = 0.0;
  if (prep.n_neg == 0)
    p.p2 = 0.0;
  p.p0 = 1.0 - p.p1 - p.p2;
  return p;
}

FitReport run_em(const Prepared &prep, L2NParams params, const FitOptions &options) {
  FitReport report;
  params = pin_empty_sides(params, prep);
  params.validate();
  for (;;) {
    const EStep s = e_step(prep, params);
    if (!std::isfinite(s.loglik))
      throw NumericError("NonFinite", "log-likelihood became non-finite at iteration " +
                                          std::to_string(report.n_iterations));
    if (!report.loglik_trace.empty()) {
      const double prev = report.loglik_trace.back();
      report.loglik_trace.push_back(s.loglik);
      if (std::abs(s.loglik - prev) < options.tol * std::abs(prev))
        break;
    } else {
      report.loglik_trace.push_back(s.loglik);
    }
    if (report.n_iterations >= options.max_iter)
      break;
    params = m_step(s, params, prep.w.size());
    ++report.n_iterations;
  }
  report.params = params;
  return report;
}

L2NParams jitter(const L2NParams &base, std::mt19937_64 &rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  L2NParams p = base;
  p.theta1 += 0.5 * z(rng);
  p.theta2 += 0.5 * z(rng);
  p.kappa1_sq = std::max(kKappaFloor, p.kappa1_sq * std::exp(0.5 * z(rng)));
  p.kappa2_sq = std::max(kKappaFloor, p.kappa2_sq * std::exp(0.5 * z(rng)));
  p.p1 *= std::exp(0.5 * z(rng));
  p.p2 *= std::exp(0.5 * z(rng));
  const double nonnull = p.p1 + p.p2;
  if (nonnull > 0.5) {
    p.p1 *= 0.5 / nonnull;
    p.p2 *= 0.5 / nonnull;
  }
  p.p0 = 1.0 - p.p1 - p.p2;
  p.sigma0_sq = p.sigma0_sq > 0.0
                    ? p.sigma0_sq * std::exp(0.5 * z(rng))
                    : 0.5 * p.sampling_variance() * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return p;
}

} // namespace

void L2NParams::validate() const {
  auto fail = [](const std::string &what) {
    throw InputError("InvalidParam", "L2N parameters: " + what);
  };
  if (n_samples < 4)
    fail("n_samples must be at least 4");
  for (double p : {p0, p1, p2})
    if (!(p >= 0.0 && p <= 1.0))
      fail("mixture probabilities must lie in [0, 1]");
  if (std::abs(p0 + p1 + p2 - 1.0) > 1e-12)
    fail("mixture probabilities must sum to 1");
  if (!(kappa1_sq > 0.0) || !(kappa2_sq > 0.0))
    fail("kappa1_sq and kappa2_sq must be positive");
  if (!(sigma0_sq >= 0.0))
    fail("sigma0_sq must be nonnegative");
  if (!std::isfinite(theta1) || !std::isfinite(theta2) || !std::isfinite(sigma0_sq) ||
      !std::isfinite(kappa1_sq) || !std::isfinite(kappa2_sq))
    fail("parameters must be finite");
}

double density_null(double w, const L2NParams &params) {
  const double v = params.null_variance();
  return std::exp(-0.5 * w * w / v) / std::sqrt(2.0 * M_PI * v);
}

double density_pos(double w, const L2NParams &params) {
  return lognormal_pdf(w, params.theta1, params.kappa1_sq);
}

double density_neg(double w, const L2NParams &params) {
  return lognormal_pdf(-w, params.theta2, params.kappa2_sq);
}

double mixture_density(double w, const L2NParams &params) {
  double d = params.p0 * density_null(w, params);
  if (params.p1 > 0.0)
    d += params.p1 * density_pos(w, params);
  if (params.p2 > 0.0)
    d += params.p2 * density_neg(w, params);
  return d;
}

L2NParams initial_params(std::span<const double> weights, int n_samples) {
  if (weights.size() < 2)
    throw InputError("InvalidParam", "need at least 2 weights to fit");
  const std::size_t n = weights.size();
  std::vector<double> mags(weights.size());
  std::transform(weights.begin(), weights.end(), mags.begin(),
                 [](double w) { return std::abs(w); });
  std::sort(mags.begin(), mags.end());
  const double q95 = sorted_quantile(mags, 0.95);
  const double q50 = sorted_quantile(mags, 0.50);

  std::vector<double> pos_seeds, neg_seeds, pos_all, neg_all, central;
  for (double w : weights) {
    if (w > 0.0)
      pos_all.push_back(w);
    else if (w < 0.0)
      neg_all.push_back(-w);
    if (w > q95)
      pos_seeds.push_back(w);
    else if (w < -q95)
      neg_seeds.push_back(-w);
    if (std::abs(w) <= q50)
      central.push_back(w);
  }

  L2NParams p;
  p.n_samples = n_samples;

  // A side with weights but almost no seeds borrows its most extreme 5%.
  auto init_side = [&](std::vector<double> &seeds, std::vector<double> &all,
                       double &prob, double &theta, double &kappa_sq) {
    if (all.empty()) {
      prob = 0.0;
      return;
    }
    if (seeds.size() < 2) {
      std::sort(all.begin(), all.end(), std::greater<>());
      const std::size_t take = std::min(
          all.size(), std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(0.05 * all.size()))));
      prob = std::max<double>(1.0, static_cast<double>(seeds.size())) / n;
      seeds.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take));
    } else {
      prob = static_cast<double>(seeds.size()) / n;
    }
    const auto m = log_moments(seeds);
    theta = m.mean;
    kappa_sq = seeds.size() >= 2 ? std::max(kKappaFloor, m.var) : 0.25;
  };
  init_side(pos_seeds, pos_all, p.p1, p.theta1, p.kappa1_sq);
  init_side(neg_seeds, neg_all, p.p2, p.theta2, p.kappa2_sq);
  p.p0 = 1.0 - p.p1 - p.p2;

  double mean = 0.0;
  for (double w : central)
    mean += w;
  mean /= static_cast<double>(central.size());
  double var = 0.0;
  for (double w : central)
    var += (w - mean) * (w - mean);
  var /= static_cast<double>(central.size());
  p.sigma0_sq = std::max(0.0, var - p.sampling_variance());
  return p;
}

double log_likelihood(std::span<const double> weights, const L2NParams &params) {
  params.validate();
  return e_step(prepare(weights), params).loglik;
}

FitReport em_fit(std::span<const double> weights, int n_samples,
                 const FitOptions &options) {
  if (n_samples < 4)
    throw InputError("InvalidParam", "n_samples must be at least 4");
  if (weights.size() < 2)
    throw InputError("InvalidParam", "need at least 2 weights to fit");
  if (!(options.tol > 0.0) || options.max_iter < 0)
    throw InputError("InvalidParam", "tolerance must be positive, max_iter nonnegative");
  const Prepared prep = prepare(weights);

  L2NParams start = options.init ? *options.init : initial_params(weights, n_samples);
  start.n_samples = n_samples;
  FitReport best = run_em(prep, start, options);

  if (options.restarts > 0) {
    std::mt19937_64 rng(options.restart_seed);
    for (int r = 0; r < options.restarts; ++r) {
      FitReport candidate = run_em(prep, jitter(start, rng), options);
      if (candidate.final_loglik() > best.final_loglik())
        best = std::move(candidate);
    }
  }

  if (prep.n_pos == 0)
    best.warnings.push_back("DegenerateComponent(positive)");
  if (prep.n_neg == 0)
    best.warnings.push_back("DegenerateComponent(negative)");
  best.rmse = rmse_fit(weights, best.params, std::max(10, options.rmse_bins));
  return best;
}

std::vector<std::size_t> subsample_genes(std::size_t n_genes, std::size_t g_prime,
                                         std::uint64_t seed) {
  if (g_prime < 2 || g_prime > n_genes)
    throw InputError("InvalidParam", "subsample size G' = " + std::to_string(g_prime) +
                                         " must satisfy 2 <= G' <= G = " +
                                         std::to_string(n_genes));
  std::vector<std::size_t> idx(n_genes);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (g_prime == n_genes)
    return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < g_prime; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_genes - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(g_prime);
  std::sort(idx.begin(), idx.end());
  return idx;
}

FitReport fit_subsampled(const ExpressionMatrix &expr, std::size_t g_prime,
                         std::uint64_t seed, const FitOptions &options,
                         unsigned threads) {
  const auto genes = subsample_genes(expr.n_genes(), g_prime, seed);
  const ExpressionMatrix sub =
      g_prime == expr.n_genes() ? expr : expr.select_genes(genes);
  const CorrelationEngine engine(sub);
  const auto weights = engine.all_weights(threads);
  FitReport report = em_fit(weights, static_cast<int>(expr.n_samples()), options);
  report.subsample_seed = seed;
  report.subsample_size = g_prime;
  return report;
}

double rmse_fit(std::span<const double> weights, const L2NParams &params, int n_bins) {
  if (n_bins < 10)
    throw InputError("InvalidParam", "rmse_fit needs at least 10 bins");
  if (weights.empty())
    return 0.0;
  const auto [lo_it, hi_it] = std::minmax_element(weights.begin(), weights.end());
  const double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo)
    hi = lo + 1e-12;
  const double width = (hi - lo) / n_bins;
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins), 0);
  for (double w : weights) {
    auto bin = static_cast<std::size_t>((w - lo) / width);
    counts[std::min(bin, counts.size() - 1)]++;
  }
  const double norm = 1.0 / (static_cast<double>(weights.size()) * width);
  double sum_sq = 0.0;
  for (int b = 0; b < n_bins; ++b) {
    const double mid = lo + (b + 0.5) * width;
    const double diff = counts[static_cast<std::size_t>(b)] * norm - mixture_density(mid, params);
    sum_sq += diff * diff;
  }
  return std::sqrt(sum_sq / n_bins);
}

} // namespace l2net
