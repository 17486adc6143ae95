#pragma once

#include "l2net/corr_engine.hpp"
#include "l2net/edge_decision.hpp"
#include "l2net/l2n_mixture.hpp"
#include "l2net/netgen.hpp"
#include "l2net/sparse_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace l2net {

enum class TruthKind { Adjacency, CovThreshold };

std::string truth_kind_name(TruthKind kind);
TruthKind parse_truth_kind(const std::string &name);

struct CurvePoint {
  double total_detected = 0.0;
  /// Integer-valued for a single sweep; replicate means may be fractional.
  double true_positives = 0.0;

  friend bool operator==(const CurvePoint &, const CurvePoint &) = default;
};

/// True positives as a function of the number of detected edges.
struct ScoreCurve {
  std::string method;
  std::vector<CurvePoint> points;
  TruthKind truth_kind = TruthKind::Adjacency;
  std::size_t n_true_edges = 0;

  /// Throws InputError("ParseError") when a point has more true positives
  /// than detections or true edges.
  void validate() const;
};

struct Score {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  /// fp / max(1, tp + fp).
  double observed_fdr = 0.0;
  /// tp / n_true_edges (0 for an empty truth).
  double power = 0.0;
};

/// Throws InputError("NodeSetMismatch") when node counts differ.
Score score(const SparseGraph &recovered, const SparseGraph &truth);

/// Edges with |r| > cutoff.
SparseGraph correlation_threshold_graph(const CorrelationEngine &engine, double cutoff);

struct SweepOptions {
  int levels = 30;
  /// Largest number of detections swept to; 0 means three times the number
  /// of true edges.
  std::uint64_t max_total = 0;
  unsigned threads = 1;
  /// When set, receives the edge set of every level in sweep order.
  std::vector<std::vector<GenePair>> *level_edges = nullptr;
};

/// Correlation thresholding: level i keeps the round(i * max_total /
/// (levels - 1)) pairs of largest |r|, ties broken by pair order.
ScoreCurve baseline_threshold_sweep(const ExpressionMatrix &expr, const SparseGraph &truth,
                                    TruthKind truth_kind, const SweepOptions &options = {});

/// Posterior-ratio sweep with log T evenly spaced from the level giving no
/// edges down to the level giving about max_total edges. Edge sets are
/// nested: lowering T never removes an edge.
ScoreCurve l2n_sweep(const ExpressionMatrix &expr, const L2NParams &params,
                     const SparseGraph &truth, TruthKind truth_kind,
                     const SweepOptions &options = {});

/// Linear interpolation of true positives at `total`; NaN outside the
/// curve's range.
double interpolate_tp(const ScoreCurve &curve, double total);

/// Expected true positives of `total` uniformly random edges.
inline double chance_tp(double total, double sparsity) { return total * sparsity; }

ScoreCurve chance_curve(const SparseGraph &truth, TruthKind truth_kind, double max_total,
                        int levels);

/// TSV of (level, gene_a, gene_b), the format import_external_edges reads.
void write_sweep_edges(const std::vector<std::vector<GenePair>> &levels,
                       const std::vector<std::string> &gene_ids,
                       const std::filesystem::path &path);

/// Reads either per-level edge lists (header "level gene_a gene_b"; levels
/// are numbered 0..L and a level without rows is empty), scored against
/// `truth`, or a precomputed curve (header "total_detected tp method
/// truth_kind"). Points come back sorted by total.
ScoreCurve import_external_edges(const std::filesystem::path &path,
                                 const std::vector<std::string> &gene_ids,
                                 const SparseGraph &truth, TruthKind truth_kind,
                                 const std::string &method);

/// Columns total_detected, tp, method, truth_kind.
void write_curves_tsv(const std::vector<ScoreCurve> &curves, const std::filesystem::path &path);

/// Mean true positives over curves, interpolated at `levels` totals evenly
/// spaced up to the smallest curve maximum.
ScoreCurve average_curves(const std::vector<ScoreCurve> &curves, int levels);

/// Counter-based seed of replicate `index` (splitmix64 of master + index).
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

struct ExperimentOptions {
  int replicates = 20;
  double fdr_alpha = 0.01;
  TruthKind truth_kind = TruthKind::Adjacency;
  bool curves = false;
  SweepOptions sweep;
  FitOptions fit;
  std::size_t block_size = kDefaultBlockSize;
  unsigned threads = 1;
};

struct ReplicateResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error_code;
  std::string error_message;
  FitReport fit;
  Thresholds thresholds;
  Score score;
  std::size_t n_true_edges = 0;
  std::size_t n_detected = 0;
  std::vector<ScoreCurve> curves;
};

struct ExperimentReport {
  NetworkConfig config;
  ExperimentOptions options;
  std::vector<ReplicateResult> replicates;
  std::size_t n_failed = 0;
  double mean_power = 0.0;
  double mean_fdr = 0.0;
  double mean_p1 = 0.0;
  double mean_p2 = 0.0;
  double mean_rmse = 0.0;
  /// Replicate-averaged curves, one per method (l2n, threshold, chance).
  std::vector<ScoreCurve> mean_curves;
};

/// One replicate: simulate with `seed`, fit, decide at the FDR level, score.
ReplicateResult run_replicate(const NetworkConfig &config, const ExperimentOptions &options,
                              std::size_t index, std::uint64_t seed);

/// Replicates run independently; a failing replicate is recorded with its
/// error code and excluded from the means.
ExperimentReport run_experiment(const NetworkConfig &config, const ExperimentOptions &options);

} // namespace l2net
