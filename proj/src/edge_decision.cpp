#include "l2net/edge_decision.hpp"

#include "l2net/errors.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace l2net {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;
/// Log-odds above this are treated as "beyond any usable ratio".
constexpr double kLogOddsCap = 745.0;

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }
double lower_tail(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Mass of LogNormal(theta, kappa_sq) above `x`.
double lognormal_upper(double x, double theta, double kappa_sq) {
  if (std::isinf(x) && x > 0)
    return 0.0;
  if (!(x > 0.0))
    return 1.0;
  return upper_tail((std::log(x) - theta) / std::sqrt(kappa_sq));
}

double side_log_odds(double magnitude, const L2NParams &p, int side) {
  const double pj = side > 0 ? p.p1 : p.p2;
  if (!(pj > 0.0) || !(magnitude > 0.0))
    return -kInf;
  if (!(p.p0 > 0.0))
    return kInf;
  const double theta = side > 0 ? p.theta1 : p.theta2;
  const double kappa_sq = side > 0 ? p.kappa1_sq : p.kappa2_sq;
  const double v = p.null_variance();
  const double l = std::log(magnitude);
  const double d = l - theta;
  const double log_alt = std::log(pj) - l - 0.5 * (kLog2Pi + std::log(kappa_sq)) -
                         0.5 * d * d / kappa_sq;
  const double log_null = std::log(p.p0) - 0.5 * (kLog2Pi + std::log(v)) -
                          0.5 * magnitude * magnitude / v;
  return log_alt - log_null;
}

void fill_estimates(const L2NParams &params, Thresholds &t) {
  t.est_type1 = estimate_type1(params, t.c1, t.c2);
  t.est_type2 = estimate_type2(params, t.c1, t.c2);
  t.est_fdr = estimate_fdr(params, t.c1, t.c2);
}

void note_missing_sides(const L2NParams &params, Thresholds &t) {
  if (std::isinf(t.c1))
    t.warnings.push_back(params.p1 > 0.0 ? "NoCrossing(positive)"
                                         : "AbsentComponent(positive)");
  if (std::isinf(t.c2))
    t.warnings.push_back(params.p2 > 0.0 ? "NoCrossing(negative)"
                                         : "AbsentComponent(negative)");
}

} // namespace

Component PosteriorTriple::assigned() const {
  if (post_pos > post_null && post_pos >= post_neg)
    return Component::Positive;
  if (post_neg > post_null && post_neg > post_pos)
    return Component::Negative;
  return Component::Null;
}

PosteriorTriple classify(double w, const L2NParams &params) {
  PosteriorTriple t;
  const int side = w > 0.0 ? 1 : (w < 0.0 ? -1 : 0);
  if (side == 0)
    return t;
  const double lo = side_log_odds(std::abs(w), params, side);
  if (lo == -kInf)
    return t;
  double alt;
  double null;
  if (lo >= 0.0) {
    const double e = std::exp(-lo);
    alt = 1.0 / (1.0 + e);
    null = e * alt;
  } else {
    const double e = std::exp(lo);
    null = 1.0 / (1.0 + e);
    alt = e * null;
  }
  t.post_null = null;
  (side > 0 ? t.post_pos : t.post_neg) = alt;
  return t;
}

DecisionRule DecisionRule::parse(const std::string &text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw InputError("InvalidParam", "decision rule '" + text +
                                         "' must look like ratio:T, type1:a or fdr:a");
  const std::string kind = text.substr(0, colon);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1)
      throw std::invalid_argument("trailing characters");
  } catch (const std::exception &) {
    throw InputError("InvalidParam", "bad numeric value in decision rule '" + text + "'");
  }
  DecisionRule rule;
  rule.value = value;
  if (kind == "ratio") {
    rule.kind = RuleKind::Ratio;
    if (!(value > 0.0))
      throw InputError("InvalidParam", "ratio threshold must be positive");
  } else if (kind == "type1" || kind == "fdr") {
    rule.kind = kind == "fdr" ? RuleKind::Fdr : RuleKind::Type1;
    if (!(value > 0.0 && value < 1.0))
      throw InputError("InvalidParam", kind + " level must lie in (0, 1)");
  } else {
    throw InputError("InvalidParam", "unknown decision rule '" + kind + "'");
  }
  return rule;
}

std::string DecisionRule::name() const {
  switch (kind) {
  case RuleKind::Ratio:
    return "ratio";
  case RuleKind::Type1:
    return "type1";
  case RuleKind::Fdr:
    return "fdr";
  }
  return "fdr";
}

std::string DecisionRule::to_string() const {
  std::ostringstream os;
  os << name() << ':' << value;
  return os.str();
}

double positive_log_odds(double w, const L2NParams &params) {
  return w > 0.0 ? side_log_odds(w, params, 1) : -kInf;
}

double negative_log_odds(double w, const L2NParams &params) {
  return w < 0.0 ? side_log_odds(-w, params, -1) : -kInf;
}

double estimate_type1(const L2NParams &params, double c1, double c2) {
  const double sigma = std::sqrt(params.null_variance());
  const double upper = std::isinf(c1) && c1 > 0 ? 0.0 : upper_tail(c1 / sigma);
  const double lower = std::isinf(c2) && c2 < 0 ? 0.0 : lower_tail(c2 / sigma);
  return params.p0 * (upper + lower);
}

double estimate_type2(const L2NParams &params, double c1, double c2) {
  const double nonnull = params.p1 + params.p2;
  if (!(nonnull > 0.0))
    return 0.0;
  double missed = 0.0;
  if (params.p1 > 0.0)
    missed += params.p1 * (1.0 - lognormal_upper(c1, params.theta1, params.kappa1_sq));
  if (params.p2 > 0.0)
    missed += params.p2 * (1.0 - lognormal_upper(-c2, params.theta2, params.kappa2_sq));
  return std::clamp(missed / nonnull, 0.0, 1.0);
}

double estimate_fdr(const L2NParams &params, double c1, double c2) {
  const double null_mass = estimate_type1(params, c1, c2);
  double total = null_mass;
  if (params.p1 > 0.0)
    total += params.p1 * lognormal_upper(c1, params.theta1, params.kappa1_sq);
  if (params.p2 > 0.0)
    total += params.p2 * lognormal_upper(-c2, params.theta2, params.kappa2_sq);
  return total > 0.0 ? std::clamp(null_mass / total, 0.0, 1.0) : 0.0;
}

OddsCurve::OddsCurve(const L2NParams &params, int side)
    : params_(params), side_(side > 0 ? 1 : -1) {
  const double pj = side_ > 0 ? params.p1 : params.p2;
  if (!(pj > 0.0))
    return;
  const double theta = side_ > 0 ? params.theta1 : params.theta2;
  const double kappa = std::sqrt(side_ > 0 ? params.kappa1_sq : params.kappa2_sq);
  const double u_lo = theta - 40.0 * kappa;
  double u_hi = std::max(theta + 40.0 * kappa, 0.5 * std::log(params.null_variance()));
  while (log_odds(std::exp(u_hi)) < kLogOddsCap && u_hi < 350.0)
    u_hi += 0.5;

  // Uniform grid over the whole range plus a dense one around the log-normal
  // mode, so a narrow component cannot fall between grid points.
  constexpr int kWide = 4096;
  constexpr int kDense = 2048;
  log_w_.reserve(kWide + kDense);
  for (int i = 0; i < kWide; ++i)
    log_w_.push_back(u_lo + (u_hi - u_lo) * i / (kWide - 1));
  for (int i = 0; i < kDense; ++i)
    log_w_.push_back(theta - 40.0 * kappa + 80.0 * kappa * i / (kDense - 1));
  std::sort(log_w_.begin(), log_w_.end());
  log_w_.erase(std::unique(log_w_.begin(), log_w_.end()), log_w_.end());

  running_max_.resize(log_w_.size());
  double best = -kInf;
  for (std::size_t i = 0; i < log_w_.size(); ++i) {
    best = std::max(best, log_odds(std::exp(log_w_[i])));
    running_max_[i] = best;
  }
}

double OddsCurve::log_odds(double magnitude) const {
  return side_log_odds(magnitude, params_, side_);
}

double OddsCurve::first_crossing(double log_ratio) const {
  if (log_w_.empty())
    return kInf;
  const auto it = std::upper_bound(running_max_.begin(), running_max_.end(), log_ratio);
  double lo;
  double hi;
  if (it == running_max_.end()) {
    // Past the tabulated range: keep stepping outward.
    double u = log_w_.back();
    while (u < 350.0) {
      const double next = u + 0.5;
      if (log_odds(std::exp(next)) > log_ratio) {
        lo = std::exp(u);
        hi = std::exp(next);
        goto refine;
      }
      u = next;
    }
    return kInf;
  } else {
    const auto idx = static_cast<std::size_t>(it - running_max_.begin());
    if (idx == 0)
      return std::exp(log_w_[0]);
    lo = std::exp(log_w_[idx - 1]);
    hi = std::exp(log_w_[idx]);
  }
refine:
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (log_odds(mid) > log_ratio)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

Thresholds thresholds_by_ratio(const L2NParams &params, double ratio) {
  params.validate();
  if (!(ratio > 0.0))
    throw InputError("InvalidParam", "posterior ratio threshold must be positive");
  Thresholds t;
  t.rule = {RuleKind::Ratio, ratio};
  const double log_ratio = std::log(ratio);
  t.c1 = OddsCurve(params, 1).first_crossing(log_ratio);
  t.c2 = -OddsCurve(params, -1).first_crossing(log_ratio);
  note_missing_sides(params, t);
  fill_estimates(params, t);
  return t;
}

Thresholds thresholds_by_type1(const L2NParams &params, double alpha) {
  params.validate();
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("InvalidParam", "Type-I level must lie in (0, 1)");
  const double nonnull = params.p1 + params.p2;
  const double share_pos = nonnull > 0.0 ? params.p1 / nonnull : 0.5;
  const double share_neg = nonnull > 0.0 ? params.p2 / nonnull : 0.5;
  const double sigma = std::sqrt(params.null_variance());
  const boost::math::normal_distribution<double> standard;

  // Each tail carries its share of alpha: p0 * Q(c / sigma) = share * alpha.
  auto cutoff = [&](double share) {
    if (share <= 0.0)
      return kInf;
    const double tail = share * alpha / params.p0;
    if (tail >= 0.5)
      return std::numeric_limits<double>::min();
    return sigma * boost::math::quantile(boost::math::complement(standard, tail));
  };

  Thresholds t;
  t.rule = {RuleKind::Type1, alpha};
  t.c1 = cutoff(share_pos);
  t.c2 = -cutoff(share_neg);
  note_missing_sides(params, t);
  fill_estimates(params, t);
  return t;
}

Thresholds thresholds_by_fdr(const L2NParams &params, double alpha) {
  params.validate();
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("InvalidParam", "FDR level must lie in (0, 1)");
  if (!(params.p1 + params.p2 > 0.0))
    throw NumericError("Unattainable", "FDR level cannot be reached: the fitted "
                                       "mixture has no non-null component");
  const OddsCurve pos(params, 1);
  const OddsCurve neg(params, -1);

  // Equal local fdr at both cutoffs is the same as a common posterior-odds
  // level, so the search runs over log T.
  struct Point {
    double c1, c2, fdr;
  };
  auto at = [&](double log_ratio) {
    Point p;
    p.c1 = pos.first_crossing(log_ratio);
    p.c2 = -neg.first_crossing(log_ratio);
    p.fdr = estimate_fdr(params, p.c1, p.c2);
    return p;
  };

  double lo = -60.0;
  Point p_lo = at(lo);
  Point p_hi = p_lo;
  double hi = lo;
  if (p_lo.fdr > alpha) {
    hi = 1.0;
    p_hi = at(hi);
    while (p_hi.fdr > alpha) {
      lo = hi;
      p_lo = p_hi;
      if (hi >= kLogOddsCap)
        throw NumericError("Unattainable",
                           "FDR level " + std::to_string(alpha) +
                               " cannot be reached even with extreme cutoffs");
      hi = std::min(kLogOddsCap, 2.0 * hi);
      p_hi = at(hi);
    }
    for (int iter = 0; iter < 300 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++iter) {
      const double mid = 0.5 * (lo + hi);
      const Point p_mid = at(mid);
      if (p_mid.fdr > alpha) {
        lo = mid;
        p_lo = p_mid;
      } else {
        hi = mid;
        p_hi = p_mid;
      }
      if (std::abs(p_hi.fdr - alpha) < 1e-13)
        break;
    }
  }

  Thresholds t;
  t.rule = {RuleKind::Fdr, alpha};
  t.c1 = p_hi.c1;
  t.c2 = p_hi.c2;
  note_missing_sides(params, t);
  fill_estimates(params, t);
  return t;
}

Thresholds solve_thresholds(const L2NParams &params, const DecisionRule &rule) {
  switch (rule.kind) {
  case RuleKind::Ratio:
    return thresholds_by_ratio(params, rule.value);
  case RuleKind::Type1:
    return thresholds_by_type1(params, rule.value);
  case RuleKind::Fdr:
    return thresholds_by_fdr(params, rule.value);
  }
  throw InputError("InvalidParam", "unknown decision rule");
}

EdgeDecider::EdgeDecider(std::size_t n_genes, const L2NParams &params,
                         const Thresholds &thresholds, Sink sink)
    : n_genes_(n_genes), params_(params), thresholds_(thresholds),
      sink_(std::move(sink)) {}

void EdgeDecider::consume(const WeightBatch &batch) {
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const double w = batch.weights[k];
    if (!thresholds_.rejects(w))
      continue;
    const bool positive = w > thresholds_.c1;
    edges_.push_back(batch.pairs[k]);
    (positive ? n_pos_ : n_neg_)++;
    if (sink_) {
      const auto post = classify(w, params_);
      EdgeRecord r;
      r.a = batch.pairs[k].m;
      r.b = batch.pairs[k].n;
      r.weight = w;
      r.post_null = post.post_null;
      r.post_pos = post.post_pos;
      r.post_neg = post.post_neg;
      r.component = positive ? Component::Positive : Component::Negative;
      sink_(r);
    }
  }
  n_pairs_ += batch.size();
}

DecisionOutcome EdgeDecider::finish() {
  DecisionOutcome out;
  out.graph = SparseGraph(n_genes_, std::move(edges_));
  out.n_pairs = n_pairs_;
  out.n_positive = n_pos_;
  out.n_negative = n_neg_;
  edges_.clear();
  return out;
}

DecisionOutcome decide_edges(const CorrelationEngine &engine, const L2NParams &params,
                             const Thresholds &thresholds, std::size_t block_size,
                             unsigned threads, const EdgeDecider::Sink &sink) {
  EdgeDecider decider(engine.n_genes(), params, thresholds, sink);
  engine.for_each_batch(block_size, threads,
                        [&](const WeightBatch &b) { decider.consume(b); });
  return decider.finish();
}

} // namespace l2net
