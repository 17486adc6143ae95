#include "l2net/eval_harness.hpp"

#include "l2net/errors.hpp"
#include "l2net/expr_io.hpp"
#include "l2net/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace l2net {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxImportLevel = 100000;

std::uint64_t default_max_total(const SweepOptions &options, const SparseGraph &truth) {
  return options.max_total > 0 ? options.max_total : 3 * truth.n_edges();
}

void check_levels(int levels) {
  if (levels < 2)
    throw InputError("InvalidParam", "a sweep needs at least 2 levels");
}

void check_truth(const ExpressionMatrix &expr, const SparseGraph &truth) {
  if (truth.n_nodes() != expr.n_genes())
    throw InputError("NodeSetMismatch", "truth has " + std::to_string(truth.n_nodes()) +
                                            " nodes but the data has " +
                                            std::to_string(expr.n_genes()) + " genes");
}

/// A sorted run of pairs together with a running count of true edges.
struct RankedPairs {
  std::vector<GenePair> pairs;
  std::vector<std::uint64_t> tp_prefix; // tp_prefix[k] = true edges among the first k

  void finish(const SparseGraph &truth) {
    tp_prefix.assign(pairs.size() + 1, 0);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      tp_prefix[k + 1] = tp_prefix[k] + (truth.has_edge(pairs[k].m, pairs[k].n) ? 1 : 0);
  }
};

std::vector<std::string> split_tabs(const std::string &line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, '\t'))
    out.push_back(cell);
  if (!line.empty() && line.back() == '\t')
    out.emplace_back();
  return out;
}

double parse_number(const std::string &cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used == cell.size())
      return v;
  } catch (const std::exception &) {
  }
  throw InputError("ParseError", "bad number '" + cell + "' on line " + std::to_string(line_no));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::string truth_kind_name(TruthKind kind) {
  return kind == TruthKind::Adjacency ? "adjacency" : "cov_threshold";
}

TruthKind parse_truth_kind(const std::string &name) {
  if (name == "adjacency")
    return TruthKind::Adjacency;
  if (name == "cov_threshold")
    return TruthKind::CovThreshold;
  throw InputError("InvalidParam", "unknown truth kind '" + name + "'");
}

void ScoreCurve::validate() const {
  for (const auto &p : points) {
    const double cap = std::min(p.total_detected, static_cast<double>(n_true_edges));
    if (p.true_positives < 0.0 || p.true_positives > cap + 1e-9)
      throw InputError("ParseError", "curve '" + method + "' has " +
                                         format_double(p.true_positives) +
                                         " true positives at " +
                                         format_double(p.total_detected) +
                                         " detections with " + std::to_string(n_true_edges) +
                                         " true edges");
  }
}

Score score(const SparseGraph &recovered, const SparseGraph &truth) {
  if (recovered.n_nodes() != truth.n_nodes())
    throw InputError("NodeSetMismatch", "recovered graph has " +
                                            std::to_string(recovered.n_nodes()) +
                                            " nodes, truth has " +
                                            std::to_string(truth.n_nodes()));
  const auto &x = recovered.edges();
  const auto &y = truth.edges();
  std::size_t tp = 0;
  auto i = x.begin();
  auto j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++tp;
      ++i;
      ++j;
    }
  }
  Score s;
  s.tp = tp;
  s.fp = x.size() - tp;
  s.fn = y.size() - tp;
  s.observed_fdr = static_cast<double>(s.fp) / static_cast<double>(std::max<std::size_t>(1, x.size()));
  s.power = y.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(y.size());
  return s;
}

SparseGraph correlation_threshold_graph(const CorrelationEngine &engine, double cutoff) {
  const std::size_t g = engine.n_genes();
  std::vector<GenePair> edges;
  for (std::size_t m = 0; m < g; ++m)
    for (std::size_t n = m + 1; n < g; ++n)
      if (std::abs(engine.correlation(m, n)) > cutoff)
        edges.push_back({static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(n)});
  return SparseGraph(g, std::move(edges));
}

ScoreCurve baseline_threshold_sweep(const ExpressionMatrix &expr, const SparseGraph &truth,
                                    TruthKind truth_kind, const SweepOptions &options) {
  check_levels(options.levels);
  check_truth(expr, truth);
  const CorrelationEngine engine(expr);
  const std::size_t g = engine.n_genes();
  const std::uint64_t k = engine.n_pairs();
  const std::uint64_t max_total = std::min<std::uint64_t>(default_max_total(options, truth), k);

  std::vector<double> magnitude(k);
  parallel_for(g, options.threads, [&](std::size_t m) {
    for (std::size_t n = m + 1; n < g; ++n)
      magnitude[pair_index(g, m, n)] = std::abs(engine.correlation(m, n));
  });
  std::vector<std::uint64_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + max_total, order.end(),
                    [&](std::uint64_t x, std::uint64_t y) {
                      return magnitude[x] != magnitude[y] ? magnitude[x] > magnitude[y] : x < y;
                    });

  RankedPairs ranked;
  ranked.pairs.reserve(max_total);
  for (std::uint64_t i = 0; i < max_total; ++i)
    ranked.pairs.push_back(pair_at(g, order[i]));
  ranked.finish(truth);

  ScoreCurve curve;
  curve.method = "threshold";
  curve.truth_kind = truth_kind;
  curve.n_true_edges = truth.n_edges();
  if (options.level_edges)
    options.level_edges->clear();
  for (int level = 0; level < options.levels; ++level) {
    const auto total = static_cast<std::uint64_t>(std::llround(
        static_cast<double>(level) * static_cast<double>(max_total) / (options.levels - 1)));
    curve.points.push_back(
        {static_cast<double>(total), static_cast<double>(ranked.tp_prefix[total])});
    if (options.level_edges)
      options.level_edges->emplace_back(ranked.pairs.begin(), ranked.pairs.begin() + total);
  }
  return curve;
}

ScoreCurve l2n_sweep(const ExpressionMatrix &expr, const L2NParams &params,
                     const SparseGraph &truth, TruthKind truth_kind,
                     const SweepOptions &options) {
  check_levels(options.levels);
  check_truth(expr, truth);
  params.validate();
  const CorrelationEngine engine(expr);
  const std::size_t g = engine.n_genes();
  const std::vector<double> weights = engine.all_weights(options.threads);
  const std::uint64_t max_total =
      std::min<std::uint64_t>(default_max_total(options, truth), weights.size());

  // Positive weights by decreasing w, negative weights by increasing w, so
  // every cutoff selects a prefix of each list.
  std::vector<std::uint64_t> pos;
  std::vector<std::uint64_t> neg;
  for (std::uint64_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0)
      pos.push_back(i);
    else if (weights[i] < 0.0)
      neg.push_back(i);
  }
  std::sort(pos.begin(), pos.end(), [&](std::uint64_t x, std::uint64_t y) {
    return weights[x] != weights[y] ? weights[x] > weights[y] : x < y;
  });
  std::sort(neg.begin(), neg.end(), [&](std::uint64_t x, std::uint64_t y) {
    return weights[x] != weights[y] ? weights[x] < weights[y] : x < y;
  });
  auto rank = [&](const std::vector<std::uint64_t> &idx) {
    RankedPairs r;
    r.pairs.reserve(idx.size());
    for (std::uint64_t i : idx)
      r.pairs.push_back(pair_at(g, i));
    r.finish(truth);
    return r;
  };
  const RankedPairs pos_ranked = rank(pos);
  const RankedPairs neg_ranked = rank(neg);

  const OddsCurve pos_curve(params, 1);
  const OddsCurve neg_curve(params, -1);
  struct Cut {
    std::size_t n_pos, n_neg;
  };
  auto cut = [&](double log_ratio) {
    const double c1 = pos_curve.first_crossing(log_ratio);
    const double c2 = -neg_curve.first_crossing(log_ratio);
    const auto np = std::partition_point(pos.begin(), pos.end(),
                                         [&](std::uint64_t i) { return weights[i] > c1; }) -
                    pos.begin();
    const auto nn = std::partition_point(neg.begin(), neg.end(),
                                         [&](std::uint64_t i) { return weights[i] < c2; }) -
                    neg.begin();
    return Cut{static_cast<std::size_t>(np), static_cast<std::size_t>(nn)};
  };
  auto count = [&](double log_ratio) {
    const Cut c = cut(log_ratio);
    return static_cast<std::uint64_t>(c.n_pos + c.n_neg);
  };

  constexpr double kLowest = -60.0;
  constexpr double kHighest = 745.0;
  double hi = 0.0;
  while (count(hi) > 0 && hi < kHighest)
    hi = hi <= 0.0 ? 1.0 : std::min(kHighest, 2.0 * hi);
  double lo = kLowest;
  if (count(lo) > max_total) {
    double a = kLowest;
    double b = hi;
    for (int iter = 0; iter < 200 && b - a > 1e-12; ++iter) {
      const double mid = 0.5 * (a + b);
      (count(mid) >= max_total ? a : b) = mid;
    }
    lo = a;
  }

  ScoreCurve curve;
  curve.method = "l2n";
  curve.truth_kind = truth_kind;
  curve.n_true_edges = truth.n_edges();
  if (options.level_edges)
    options.level_edges->clear();
  for (int level = 0; level < options.levels; ++level) {
    const double log_ratio = hi - (hi - lo) * level / (options.levels - 1);
    const Cut c = cut(log_ratio);
    curve.points.push_back({static_cast<double>(c.n_pos + c.n_neg),
                            static_cast<double>(pos_ranked.tp_prefix[c.n_pos] +
                                                neg_ranked.tp_prefix[c.n_neg])});
    if (options.level_edges) {
      std::vector<GenePair> edges(pos_ranked.pairs.begin(), pos_ranked.pairs.begin() + c.n_pos);
      edges.insert(edges.end(), neg_ranked.pairs.begin(), neg_ranked.pairs.begin() + c.n_neg);
      options.level_edges->push_back(std::move(edges));
    }
  }
  return curve;
}

double interpolate_tp(const ScoreCurve &curve, double total) {
  const auto &pts = curve.points;
  if (pts.empty() || total < pts.front().total_detected || total > pts.back().total_detected)
    return kNaN;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].total_detected == total)
      return pts[i].true_positives;
    if (i + 1 < pts.size() && pts[i + 1].total_detected > total) {
      const double span = pts[i + 1].total_detected - pts[i].total_detected;
      const double t = (total - pts[i].total_detected) / span;
      return pts[i].true_positives + t * (pts[i + 1].true_positives - pts[i].true_positives);
    }
  }
  return pts.back().true_positives;
}

ScoreCurve chance_curve(const SparseGraph &truth, TruthKind truth_kind, double max_total,
                        int levels) {
  check_levels(levels);
  ScoreCurve curve;
  curve.method = "chance";
  curve.truth_kind = truth_kind;
  curve.n_true_edges = truth.n_edges();
  const double sparsity = truth.sparsity();
  for (int level = 0; level < levels; ++level) {
    const double total = max_total * level / (levels - 1);
    curve.points.push_back({total, chance_tp(total, sparsity)});
  }
  return curve;
}

void write_sweep_edges(const std::vector<std::vector<GenePair>> &levels,
                       const std::vector<std::string> &gene_ids,
                       const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << "level\tgene_a\tgene_b\n";
  for (std::size_t level = 0; level < levels.size(); ++level)
    for (const auto &e : levels[level]) {
      const auto lo = std::min(e.m, e.n);
      const auto hi = std::max(e.m, e.n);
      out << level << '\t' << gene_ids.at(lo) << '\t' << gene_ids.at(hi) << '\n';
    }
  if (!out)
    throw IoError("write failed for " + path.string());
}

ScoreCurve import_external_edges(const std::filesystem::path &path,
                                 const std::vector<std::string> &gene_ids,
                                 const SparseGraph &truth, TruthKind truth_kind,
                                 const std::string &method) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  ScoreCurve curve;
  curve.method = method;
  curve.truth_kind = truth_kind;
  curve.n_true_edges = truth.n_edges();

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line))
    return curve;
  ++line_no;
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  const auto header = split_tabs(line);

  if (header == std::vector<std::string>{"level", "gene_a", "gene_b"}) {
    const auto index = index_genes(gene_ids);
    // Levels are 0..max; a level without rows is an empty edge set.
    std::vector<std::vector<GenePair>> levels;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (line.empty())
        continue;
      const auto cells = split_tabs(line);
      if (cells.size() != 3)
        throw InputError("ParseError", "expected 3 columns on line " + std::to_string(line_no));
      auto lookup = [&](const std::string &id) {
        const auto it = index.find(id);
        if (it == index.end())
          throw InputError("ParseError",
                           "unknown gene '" + id + "' on line " + std::to_string(line_no));
        return it->second;
      };
      std::size_t level = 0;
      const auto [end, ec] =
          std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), level);
      if (ec != std::errc() || end != cells[0].data() + cells[0].size() ||
          level > kMaxImportLevel)
        throw InputError("ParseError", "level must be an integer in [0, " +
                                           std::to_string(kMaxImportLevel) + "] on line " +
                                           std::to_string(line_no));
      if (level >= levels.size())
        levels.resize(level + 1);
      levels[level].push_back({lookup(cells[1]), lookup(cells[2])});
    }
    for (auto &edges : levels) {
      const SparseGraph g(truth.n_nodes(), std::move(edges), SparseGraph::Duplicates::Merge);
      const Score s = score(g, truth);
      curve.points.push_back({static_cast<double>(g.n_edges()), static_cast<double>(s.tp)});
    }
  } else if (header.size() == 4 && header[0] == "total_detected" && header[1] == "tp" &&
             header[2] == "method" && header[3] == "truth_kind") {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r')
        line.pop_back();
      if (line.empty())
        continue;
      const auto cells = split_tabs(line);
      if (cells.size() != 4)
        throw InputError("ParseError", "expected 4 columns on line " + std::to_string(line_no));
      if (!method.empty() && cells[2] != method)
        continue;
      if (curve.method.empty())
        curve.method = cells[2];
      curve.truth_kind = parse_truth_kind(cells[3]);
      curve.points.push_back(
          {parse_number(cells[0], line_no), parse_number(cells[1], line_no)});
    }
  } else {
    throw InputError("ParseError", "unrecognized header in " + path.string());
  }

  std::stable_sort(curve.points.begin(), curve.points.end(),
                   [](const CurvePoint &a, const CurvePoint &b) {
                     return a.total_detected < b.total_detected;
                   });
  curve.validate();
  return curve;
}

void write_curves_tsv(const std::vector<ScoreCurve> &curves, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << "total_detected\ttp\tmethod\ttruth_kind\n";
  for (const auto &c : curves)
    for (const auto &p : c.points)
      out << format_double(p.total_detected) << '\t' << format_double(p.true_positives) << '\t'
          << c.method << '\t' << truth_kind_name(c.truth_kind) << '\n';
  if (!out)
    throw IoError("write failed for " + path.string());
}

ScoreCurve average_curves(const std::vector<ScoreCurve> &curves, int levels) {
  check_levels(levels);
  ScoreCurve mean;
  if (curves.empty())
    return mean;
  mean.method = curves.front().method;
  mean.truth_kind = curves.front().truth_kind;
  double top = std::numeric_limits<double>::infinity();
  double n_true = 0.0;
  for (const auto &c : curves) {
    top = std::min(top, c.points.empty() ? 0.0 : c.points.back().total_detected);
    n_true += static_cast<double>(c.n_true_edges);
  }
  mean.n_true_edges = static_cast<std::size_t>(std::llround(n_true / curves.size()));
  for (int level = 0; level < levels; ++level) {
    const double total = top * level / (levels - 1);
    double sum = 0.0;
    for (const auto &c : curves)
      sum += interpolate_tp(c, total);
    mean.points.push_back({total, sum / static_cast<double>(curves.size())});
  }
  return mean;
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master + 0x9e3779b97f4a7c15ULL * (index + 1));
}

ReplicateResult run_replicate(const NetworkConfig &config, const ExperimentOptions &options,
                              std::size_t index, std::uint64_t seed) {
  ReplicateResult r;
  r.index = index;
  r.seed = seed;
  try {
    NetworkConfig cfg = config;
    cfg.seed = seed;
    const SimulatedData data = simulate(cfg);
    const SparseGraph truth =
        options.truth_kind == TruthKind::Adjacency
            ? data.truth.adjacency
            : truth_by_cov_threshold(data.truth.true_cov, data.truth.sparsity);
    r.n_true_edges = truth.n_edges();

    const std::size_t g_prime = cfg.g_prime == 0 ? cfg.n_genes : cfg.g_prime;
    r.fit = fit_subsampled(data.expr, g_prime, seed, options.fit, options.threads);
    r.thresholds = thresholds_by_fdr(r.fit.params, options.fdr_alpha);
    const CorrelationEngine engine(data.expr);
    const DecisionOutcome outcome =
        decide_edges(engine, r.fit.params, r.thresholds, options.block_size, options.threads);
    r.n_detected = outcome.graph.n_edges();
    r.score = score(outcome.graph, truth);

    if (options.curves) {
      SweepOptions sweep = options.sweep;
      sweep.threads = options.threads;
      sweep.level_edges = nullptr;
      r.curves.push_back(l2n_sweep(data.expr, r.fit.params, truth, options.truth_kind, sweep));
      r.curves.push_back(baseline_threshold_sweep(data.expr, truth, options.truth_kind, sweep));
      const double top = static_cast<double>(default_max_total(sweep, truth));
      r.curves.push_back(chance_curve(truth, options.truth_kind, top, sweep.levels));
    }
    r.ok = true;
  } catch (const Error &e) {
    r.error_code = e.code();
    r.error_message = e.what();
  } catch (const std::exception &e) {
    r.error_code = "Internal";
    r.error_message = e.what();
  }
  return r;
}

ExperimentReport run_experiment(const NetworkConfig &config, const ExperimentOptions &options) {
  config.validate();
  if (options.replicates < 1)
    throw InputError("InvalidParam", "replicates must be at least 1");
  if (!(options.fdr_alpha > 0.0 && options.fdr_alpha < 1.0))
    throw InputError("InvalidParam", "FDR level must lie in (0, 1)");

  ExperimentReport report;
  report.config = config;
  report.options = options;
  report.replicates.resize(static_cast<std::size_t>(options.replicates));
  ExperimentOptions inner = options;
  inner.threads = 1;
  parallel_for(report.replicates.size(), options.threads, [&](std::size_t i) {
    report.replicates[i] = run_replicate(config, inner, i, replicate_seed(config.seed, i));
  });

  std::size_t ok = 0;
  std::map<std::string, std::vector<ScoreCurve>> by_method;
  std::vector<std::string> method_order;
  for (const auto &r : report.replicates) {
    if (!r.ok) {
      ++report.n_failed;
      continue;
    }
    ++ok;
    report.mean_power += r.score.power;
    report.mean_fdr += r.score.observed_fdr;
    report.mean_p1 += r.fit.params.p1;
    report.mean_p2 += r.fit.params.p2;
    report.mean_rmse += r.fit.rmse;
    for (const auto &c : r.curves) {
      auto [it, inserted] = by_method.try_emplace(c.method);
      if (inserted)
        method_order.push_back(c.method);
      it->second.push_back(c);
    }
  }
  if (ok > 0) {
    const double n = static_cast<double>(ok);
    report.mean_power /= n;
    report.mean_fdr /= n;
    report.mean_p1 /= n;
    report.mean_p2 /= n;
    report.mean_rmse /= n;
  }
  for (const auto &m : method_order)
    report.mean_curves.push_back(average_curves(by_method[m], options.sweep.levels));
  return report;
}

} // namespace l2net
