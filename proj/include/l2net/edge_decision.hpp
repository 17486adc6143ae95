#pragma once

#include "l2net/corr_engine.hpp"
#include "l2net/expr_io.hpp"
#include "l2net/l2n_mixture.hpp"
#include "l2net/sparse_graph.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace l2net {

/// Posterior probabilities of the three components for one weight.
struct PosteriorTriple {
  double post_null = 1.0;
  double post_pos = 0.0;
  double post_neg = 0.0;

  /// Arg-max component; ties go to the null.
  Component assigned() const;
};

PosteriorTriple classify(double w, const L2NParams &params);

enum class RuleKind { Ratio, Type1, Fdr };

/// How the cutoffs are chosen: posterior-odds ratio T, Type-I level alpha, or
/// FDR level alpha.
struct DecisionRule {
  RuleKind kind = RuleKind::Fdr;
  double value = 0.05;

  /// Parses "ratio:T", "type1:alpha" or "fdr:alpha".
  static DecisionRule parse(const std::string &text);
  std::string name() const;
  std::string to_string() const;
};

/// Edge cutoffs: a pair is an edge iff w > c1 or w < c2. An absent side is
/// represented by c1 = +inf or c2 = -inf.
struct Thresholds {
  double c1 = 0.0;
  double c2 = 0.0;
  DecisionRule rule;
  double est_type1 = 0.0;
  double est_type2 = 0.0;
  double est_fdr = 0.0;
  /// Sides on which no cutoff exists, e.g. "NoCrossing(positive)".
  std::vector<std::string> warnings;

  double power() const { return 1.0 - est_type2; }
  bool rejects(double w) const { return w > c1 || w < c2; }
};

/// log(p1 f1(w) / (p0 f0(w))) for w > 0 (-inf when p1 = 0).
double positive_log_odds(double w, const L2NParams &params);
/// log(p2 f2(w) / (p0 f0(w))) for w < 0 (-inf when p2 = 0).
double negative_log_odds(double w, const L2NParams &params);

/// Null probability mass outside [c2, c1], scaled by p0.
double estimate_type1(const L2NParams &params, double c1, double c2);
/// Non-null mass inside [c2, c1], divided by p1 + p2 (0 when p1 + p2 = 0).
double estimate_type2(const L2NParams &params, double c1, double c2);
/// Null share of the total mixture mass outside [c2, c1].
double estimate_fdr(const L2NParams &params, double c1, double c2);

Thresholds thresholds_by_ratio(const L2NParams &params, double ratio);
Thresholds thresholds_by_type1(const L2NParams &params, double alpha);
Thresholds thresholds_by_fdr(const L2NParams &params, double alpha);
Thresholds solve_thresholds(const L2NParams &params, const DecisionRule &rule);

/// Cutoff search over one half-line.
///
/// The log-odds curve is tabulated once on a log-spaced grid together with
/// its running maximum, so the first grid point above any level is found by
/// binary search; the crossing is then refined by bisection.
class OddsCurve {
public:
  /// `side` is +1 for the positive half-line, -1 for the negative one.
  OddsCurve(const L2NParams &params, int side);

  /// Smallest magnitude |w| on this side with log-odds above `log_ratio`;
  /// +inf when the component is absent.
  double first_crossing(double log_ratio) const;
  /// Largest log-odds over the tabulated range.
  double max_log_odds() const { return running_max_.empty() ? -std::numeric_limits<double>::infinity()
                                : running_max_.back(); }

private:
  double log_odds(double magnitude) const;

  L2NParams params_;
  int side_;
  std::vector<double> log_w_;
  std::vector<double> running_max_;
};

struct DecisionOutcome {
  SparseGraph graph;
  std::uint64_t n_pairs = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

/// Applies fixed cutoffs to a weight stream batch by batch.
class EdgeDecider {
public:
  using Sink = std::function<void(const EdgeRecord &)>;

  EdgeDecider(std::size_t n_genes, const L2NParams &params,
              const Thresholds &thresholds, Sink sink = {});

  void consume(const WeightBatch &batch);
  DecisionOutcome finish();

private:
  std::size_t n_genes_;
  L2NParams params_;
  Thresholds thresholds_;
  Sink sink_;
  std::vector<GenePair> edges_;
  std::uint64_t n_pairs_ = 0;
  std::size_t n_pos_ = 0;
  std::size_t n_neg_ = 0;
};

/// Keeps exactly the pairs with w > c1 (C1) or w < c2 (C2), in stream order.
DecisionOutcome decide_edges(const CorrelationEngine &engine, const L2NParams &params,
                             const Thresholds &thresholds,
                             std::size_t block_size = kDefaultBlockSize,
                             unsigned threads = 1,
                             const EdgeDecider::Sink &sink = {});

} // namespace l2net
