#include "l2net/corr_engine.hpp"
#include "l2net/errors.hpp"
#include "l2net/l2n_mixture.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace l2net;

namespace {

std::vector<double> draw_mixture(const L2NParams &p, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> null(0.0, std::sqrt(p.null_variance()));
  std::lognormal_distribution<double> pos(p.theta1, std::sqrt(p.kappa1_sq));
  std::lognormal_distribution<double> neg(p.theta2, std::sqrt(p.kappa2_sq));
  std::vector<double> w(k);
  for (double &x : w) {
    const double u = unit(rng);
    x = u < p.p1 ? pos(rng) : u < p.p1 + p.p2 ? -neg(rng) : null(rng);
  }
  return w;
}

L2NParams example_params() {
  L2NParams p;
  p.p1 = 0.1;
  p.p2 = 0.05;
  p.p0 = 0.85;
  p.sigma0_sq = 0.0;
  p.theta1 = -0.25;
  p.kappa1_sq = 0.25;
  p.theta2 = -0.5;
  p.kappa2_sq = 0.16;
  p.n_samples = 100;
  return p;
}

double normal_pdf(double x, double var) {
  return std::exp(-0.5 * x * x / var) / std::sqrt(2 * std::numbers::pi * var);
}

bool within_recovery(double got, double truth) {
  return std::abs(got - truth) <= std::max(0.05 * std::abs(truth), 0.01);
}

} // namespace

TEST(Density, NullAtZero) {
  L2NParams p;
  p.n_samples = 103;
  EXPECT_NEAR(density_null(0.0, p), 1.0 / std::sqrt(2 * std::numbers::pi * 0.01), 1e-12);
  EXPECT_NEAR(density_null(0.0, p), 3.98942, 1e-5);
}

TEST(Density, NullIsEvenAndStandardAtUnitVariance) {
  L2NParams p;
  p.n_samples = 103;
  p.sigma0_sq = 0.99;
  for (double w = -5; w <= 5; w += 0.125) {
    EXPECT_EQ(density_null(w, p), density_null(-w, p));
    EXPECT_NEAR(density_null(w, p), normal_pdf(w, 1.0), 1e-14);
  }
}

TEST(Density, PositiveSupportAndMedian) {
  L2NParams p = example_params();
  EXPECT_EQ(density_pos(-0.3, p), 0.0);
  EXPECT_EQ(density_pos(0.0, p), 0.0);
  EXPECT_EQ(density_neg(0.3, p), 0.0);
  const double median = std::exp(p.theta1);
  const double expected = 1.0 / (median * std::sqrt(2 * std::numbers::pi * p.kappa1_sq));
  EXPECT_NEAR(density_pos(median, p), expected, 1e-12);
  EXPECT_NEAR(density_neg(-std::exp(p.theta2), p),
              1.0 / (std::exp(p.theta2) * std::sqrt(2 * std::numbers::pi * p.kappa2_sq)), 1e-12);
}

TEST(Density, ComponentsIntegrateToOne) {
  boost::math::quadrature::exp_sinh<double> half;
  boost::math::quadrature::sinh_sinh<double> whole;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> theta(-2.0, 1.0), kappa(0.05, 2.0), s0(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    L2NParams p = example_params();
    p.theta1 = theta(rng);
    p.theta2 = theta(rng);
    p.kappa1_sq = kappa(rng);
    p.kappa2_sq = kappa(rng);
    p.sigma0_sq = s0(rng);
    const double ipos = half.integrate([&](double w) { return density_pos(w, p); });
    const double ineg = half.integrate([&](double w) { return density_neg(-w, p); });
    const double inull = whole.integrate([&](double w) { return density_null(w, p); });
    EXPECT_NEAR(ipos, 1.0, 1e-6);
    EXPECT_NEAR(ineg, 1.0, 1e-6);
    EXPECT_NEAR(inull, 1.0, 1e-6);
    const double imix = half.integrate([&](double w) { return mixture_density(w, p); }) +
                        half.integrate([&](double w) { return mixture_density(-w, p); });
    EXPECT_NEAR(imix, 1.0, 1e-6);
  }
}

TEST(Validate, RejectsBadParams) {
  L2NParams p = example_params();
  EXPECT_NO_THROW(p.validate());
  p.p0 = 0.9;
  EXPECT_THROW(p.validate(), InputError);
  p = example_params();
  p.kappa1_sq = 0.0;
  EXPECT_THROW(p.validate(), InputError);
  p = example_params();
  p.sigma0_sq = -0.1;
  EXPECT_THROW(p.validate(), InputError);
}

TEST(EmFit, PureNormalHasNoSignal) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> nd;
  std::vector<double> w(100000);
  for (double &x : w)
    x = nd(rng);
  const auto report = em_fit(w, 103);
  EXPECT_LE(report.params.p1 + report.params.p2, 0.01);
  EXPECT_NEAR(report.params.sigma0_sq, 0.99, 0.02);
}

TEST(EmFit, AllPositiveIsDegenerateNegative) {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(-0.5, 0.5);
  std::vector<double> w(5000);
  for (double &x : w)
    x = ln(rng);
  const auto report = em_fit(w, 100);
  EXPECT_EQ(report.params.p2, 0.0);
  EXPECT_NE(std::find(report.warnings.begin(), report.warnings.end(),
                      "DegenerateComponent(negative)"),
            report.warnings.end());
}

TEST(EmFit, NonFiniteWeightRejected) {
  std::vector<double> w{0.1, -0.2, std::nan(""), 0.3};
  EXPECT_THROW(em_fit(w, 100), NumericError);
}

TEST(EmFit, TraceNondecreasingOnRandomInputs) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0), theta(-1.5, 0.5), kappa(0.05, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    L2NParams p;
    p.p1 = 0.3 * unit(rng);
    p.p2 = 0.3 * unit(rng);
    p.p0 = 1 - p.p1 - p.p2;
    p.sigma0_sq = 0.05 * unit(rng);
    p.theta1 = theta(rng);
    p.theta2 = theta(rng);
    p.kappa1_sq = kappa(rng);
    p.kappa2_sq = kappa(rng);
    p.n_samples = 10 + static_cast<int>(200 * unit(rng));
    const auto w = draw_mixture(p, 2000, rng());
    const auto report = em_fit(w, p.n_samples);
    ASSERT_FALSE(report.loglik_trace.empty());
    for (std::size_t i = 1; i < report.loglik_trace.size(); ++i) {
      const double prev = report.loglik_trace[i - 1];
      EXPECT_GE(report.loglik_trace[i], prev - 1e-8 * std::abs(prev))
          << "trial " << trial << " iteration " << i;
    }
    EXPECT_GE(report.rmse, 0.0);
    EXPECT_NO_THROW(report.params.validate());
  }
}

TEST(EmFit, RecoversParameters) {
  const L2NParams truth = example_params();
  const auto w = draw_mixture(truth, 200000, 42);
  const auto fit = em_fit(w, truth.n_samples).params;
  EXPECT_PRED2(within_recovery, fit.p0, truth.p0);
  EXPECT_PRED2(within_recovery, fit.p1, truth.p1);
  EXPECT_PRED2(within_recovery, fit.p2, truth.p2);
  EXPECT_PRED2(within_recovery, fit.sigma0_sq, truth.sigma0_sq);
  EXPECT_PRED2(within_recovery, fit.theta1, truth.theta1);
  EXPECT_PRED2(within_recovery, fit.kappa1_sq, truth.kappa1_sq);
  EXPECT_PRED2(within_recovery, fit.theta2, truth.theta2);
  EXPECT_PRED2(within_recovery, fit.kappa2_sq, truth.kappa2_sq);
}

TEST(EmFit, SmallPositiveShareRecovered) {
  L2NParams truth = example_params();
  truth.p1 = 0.0396;
  truth.p2 = 0.0;
  truth.p0 = 1 - truth.p1;
  const auto w = draw_mixture(truth, 124750, 7);
  EXPECT_NEAR(em_fit(w, truth.n_samples).params.p1, 0.0396, 0.005);
}

TEST(EmFit, Deterministic) {
  const auto w = draw_mixture(example_params(), 20000, 3);
  FitOptions opts;
  opts.restarts = 2;
  opts.restart_seed = 11;
  const auto a = em_fit(w, 100, opts);
  const auto b = em_fit(w, 100, opts);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.loglik_trace, b.loglik_trace);
  EXPECT_EQ(a.rmse, b.rmse);
}

TEST(FitSubsampled, WholeSetEqualsDirectFit) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  const std::size_t g = 60, n = 20;
  std::vector<double> values(g * n);
  for (std::size_t i = 0; i < g; ++i) {
    const double shared = i < 20 ? 1.0 : 0.0;
    for (std::size_t j = 0; j < n; ++j)
      values[i * n + j] = nd(rng) + shared * std::sin(static_cast<double>(j));
  }
  std::vector<std::string> genes, samples;
  for (std::size_t i = 0; i < g; ++i)
    genes.push_back("g" + std::to_string(i));
  for (std::size_t j = 0; j < n; ++j)
    samples.push_back("s" + std::to_string(j));
  const ExpressionMatrix expr(genes, samples, values);
  const CorrelationEngine engine(expr);
  const auto direct = em_fit(engine.all_weights(), static_cast<int>(n));
  const auto sub = fit_subsampled(expr, g, 77);
  EXPECT_EQ(sub.params, direct.params);
  EXPECT_EQ(sub.subsample_size, g);
  EXPECT_EQ(sub.subsample_seed, 77u);

  const auto again = fit_subsampled(expr, 30, 5);
  const auto again2 = fit_subsampled(expr, 30, 5, {}, 2);
  EXPECT_EQ(again.params, again2.params);
  EXPECT_EQ(again.loglik_trace, again2.loglik_trace);
  EXPECT_THROW(fit_subsampled(expr, g + 1, 1), InputError);
  EXPECT_THROW(fit_subsampled(expr, 1, 1), InputError);
}

TEST(FitSubsampled, GeneSelection) {
  const auto idx = subsample_genes(100, 10, 9);
  EXPECT_EQ(idx.size(), 10u);
  EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
  EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
  EXPECT_EQ(idx, subsample_genes(100, 10, 9));
  EXPECT_NE(idx, subsample_genes(100, 10, 10));
}

TEST(Rmse, SampledFromModelIsSmall) {
  L2NParams p;
  p.n_samples = 103;
  p.sigma0_sq = 0.99;
  p.p1 = 0.04;
  p.p2 = 0.02;
  p.p0 = 0.94;
  p.theta1 = -0.25;
  p.kappa1_sq = 0.25;
  p.theta2 = -0.25;
  p.kappa2_sq = 0.25;
  const auto w = draw_mixture(p, 1000000, 21);
  EXPECT_LE(rmse_fit(w, p, 100), 0.01);
}

TEST(Rmse, ExactNullModelShrinksWithSampleSize) {
  L2NParams p;
  p.n_samples = 103;
  p.sigma0_sq = 0.99;
  const double small = rmse_fit(draw_mixture(p, 10000, 1), p, 100);
  const double large = rmse_fit(draw_mixture(p, 1000000, 1), p, 100);
  EXPECT_LT(large, small);
  EXPECT_LT(large, 0.005);
}

TEST(Rmse, ShiftedThetaIsPoor) {
  L2NParams p = example_params();
  p.p1 = 0.2;
  p.p2 = 0.0;
  p.p0 = 0.8;
  const auto w = draw_mixture(p, 200000, 2);
  L2NParams wrong = p;
  wrong.theta1 += 2.0;
  EXPECT_GT(rmse_fit(w, wrong, 100), 0.01);
  EXPECT_THROW(rmse_fit(w, p, 9), InputError);
}
