#include "cli.hpp"

#include "l2net/config.hpp"
#include "l2net/corr_engine.hpp"
#include "l2net/edge_decision.hpp"
#include "l2net/errors.hpp"
#include "l2net/eval_harness.hpp"
#include "l2net/expr_io.hpp"
#include "l2net/graph_stats.hpp"
#include "l2net/l2n_mixture.hpp"
#include "l2net/netgen.hpp"
#include "l2net/parallel.hpp"
#include "l2net/report_json.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace l2net::cli {

namespace {

struct Common {
  std::uint64_t seed = 1;
  bool seed_given = false;
  unsigned threads = default_threads();
  std::size_t block_size = kDefaultBlockSize;
  fs::path out_dir = ".";
};

void add_common(CLI::App &cmd, Common &c) {
  cmd.add_option("--seed", c.seed, "Random seed")
      ->each([&c](const std::string &) { c.seed_given = true; });
  cmd.add_option("--threads", c.threads, "Worker threads (output does not depend on it)")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--block-size", c.block_size, "Pairs per correlation block")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--out", c.out_dir, "Output directory")->required();
}

void prepare_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string());
}

/// Records everything needed to rerun a command next to its outputs.
class Manifest {
public:
  Manifest(std::string command, const std::vector<std::string> &args)
      : start_(std::chrono::steady_clock::now()) {
    doc_["command"] = std::move(command);
    doc_["version"] = kVersion;
    doc_["args"] = args;
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::array();
  }
  void input(const std::string &role, const fs::path &p) { doc_["inputs"][role] = p.string(); }
  void output(const fs::path &p) { doc_["outputs"].push_back(p.filename().string()); }
  void set(const std::string &key, json value) { doc_[key] = std::move(value); }
  void write(const Common &c) {
    doc_["seed"] = c.seed;
    doc_["threads"] = c.threads;
    doc_["block_size"] = c.block_size;
    doc_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(doc_, c.out_dir / "manifest.json");
  }

private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

ExpressionMatrix read_expression(const fs::path &path, const std::string &delimiter,
                                 bool drop_missing, json &summary) {
  ParseOptions opts;
  if (delimiter == "tab")
    opts.delimiter = '\t';
  else if (delimiter == "comma")
    opts.delimiter = ',';
  else if (delimiter != "auto")
    throw InputError("InvalidParam", "delimiter must be auto, tab or comma");
  opts.drop_missing = drop_missing;
  ParseResult parsed = parse_expression(path, opts);
  if (!parsed.dropped_genes.empty())
    summary["dropped_genes"] = parsed.dropped_genes;
  return std::move(parsed.matrix);
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  fs::path expr;
  std::optional<std::size_t> g_prime;
  int restarts = 0;
  double tol = kDefaultTolerance;
  int max_iter = kDefaultMaxIter;
  int rmse_bins = kDefaultRmseBins;
  std::string delimiter = "auto";
  bool drop_missing = false;
};

json cmd_fit(const FitArgs &a, const Common &c, Manifest &manifest) {
  json summary = {{"command", "fit"}};
  const ExpressionMatrix expr = read_expression(a.expr, a.delimiter, a.drop_missing, summary);
  const std::size_t g_prime = a.g_prime.value_or(std::min<std::size_t>(1000, expr.n_genes()));
  if (g_prime > expr.n_genes() || g_prime < 2)
    throw InputError("InvalidParam", "--g-prime " + std::to_string(g_prime) +
                                         " must lie in [2, " +
                                         std::to_string(expr.n_genes()) + "]");
  prepare_dir(c.out_dir);
  FitOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.restarts = a.restarts;
  opts.restart_seed = c.seed;
  opts.rmse_bins = a.rmse_bins;
  const FitReport report = fit_subsampled(expr, g_prime, c.seed, opts, c.threads);

  const fs::path out = c.out_dir / "fit_report.json";
  write_json(fit_report_json(report), out);
  manifest.input("expression", a.expr);
  manifest.output(out);
  summary["p0"] = report.params.p0;
  summary["p1"] = report.params.p1;
  summary["p2"] = report.params.p2;
  summary["rmse"] = number_json(report.rmse);
  summary["n_iterations"] = report.n_iterations;
  summary["subsample_size"] = report.subsample_size;
  summary["warnings"] = report.warnings;
  return summary;
}

// ---- infer -----------------------------------------------------------------

struct InferArgs {
  fs::path expr;
  fs::path fit;
  std::string rule = "fdr:0.05";
  std::optional<fs::path> weight_cache;
  std::string delimiter = "auto";
  bool drop_missing = false;
};

json cmd_infer(const InferArgs &a, const Common &c, Manifest &manifest) {
  json summary = {{"command", "infer"}};
  const DecisionRule rule = DecisionRule::parse(a.rule);
  const ExpressionMatrix expr = read_expression(a.expr, a.delimiter, a.drop_missing, summary);
  const FitReport fit = fit_report_from_json(read_json(a.fit));
  if (fit.params.n_samples != static_cast<int>(expr.n_samples()))
    throw InputError("InvalidParam", "fit report was made for N = " +
                                         std::to_string(fit.params.n_samples) +
                                         " samples but the data has " +
                                         std::to_string(expr.n_samples()));
  const Thresholds thresholds = solve_thresholds(fit.params, rule);
  prepare_dir(c.out_dir);

  const fs::path edges_path = c.out_dir / "edges.tsv";
  EdgeListWriter writer(edges_path, expr.gene_ids());
  EdgeDecider decider(expr.n_genes(), fit.params, thresholds,
                      [&writer](const EdgeRecord &r) { writer.write(r); });
  const CorrelationEngine engine(expr);

  if (a.weight_cache && fs::exists(*a.weight_cache)) {
    // Reuse cached weights after checking they cover this matrix's pairs in
    // stream order.
    std::uint64_t next = 0;
    read_weight_cache(*a.weight_cache, c.block_size, [&](const WeightBatch &b) {
      for (const auto &p : b.pairs) {
        if (next >= engine.n_pairs() || p != pair_at(engine.n_genes(), next))
          throw InputError("InvalidParam", "weight cache " + a.weight_cache->string() +
                                               " does not match the expression matrix");
        ++next;
      }
      decider.consume(b);
    });
    if (next != engine.n_pairs())
      throw InputError("InvalidParam", "weight cache " + a.weight_cache->string() +
                                           " holds " + std::to_string(next) + " of " +
                                           std::to_string(engine.n_pairs()) + " pairs");
    summary["weight_cache"] = "read";
  } else {
    if (a.weight_cache) {
      write_weight_cache(engine, *a.weight_cache, c.block_size, c.threads);
      summary["weight_cache"] = "written";
    }
    engine.for_each_batch(c.block_size, c.threads,
                          [&decider](const WeightBatch &b) { decider.consume(b); });
  }
  const DecisionOutcome outcome = decider.finish();
  writer.close();

  json decision = decision_json(thresholds);
  decision["n_pairs"] = outcome.n_pairs;
  decision["n_edges"] = outcome.graph.n_edges();
  decision["n_positive"] = outcome.n_positive;
  decision["n_negative"] = outcome.n_negative;
  decision["table1"] = {{"p1", fit.params.p1},
                        {"p2", fit.params.p2},
                        {"Power", number_json(thresholds.power())},
                        {"FDR", number_json(thresholds.est_fdr)},
                        {"Edges", outcome.graph.n_edges()}};
  const fs::path decision_path = c.out_dir / "decision.json";
  write_json(decision, decision_path);

  manifest.input("expression", a.expr);
  manifest.input("fit_report", a.fit);
  if (a.weight_cache)
    manifest.input("weight_cache", *a.weight_cache);
  manifest.set("rule", rule.to_string());
  manifest.output(edges_path);
  manifest.output(decision_path);

  summary["rule"] = rule.to_string();
  summary["c1"] = number_json(thresholds.c1);
  summary["c2"] = number_json(thresholds.c2);
  summary["p1"] = fit.params.p1;
  summary["p2"] = fit.params.p2;
  summary["power"] = number_json(thresholds.power());
  summary["fdr"] = number_json(thresholds.est_fdr);
  summary["edges"] = outcome.graph.n_edges();
  summary["n_pairs"] = outcome.n_pairs;
  return summary;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  fs::path config;
};

json cmd_simulate(const SimulateArgs &a, const Common &c, Manifest &manifest) {
  NetworkConfig config = load_network_config(a.config);
  if (c.seed_given)
    config.seed = c.seed;
  prepare_dir(c.out_dir);
  const SimulatedData data = simulate(config);

  const fs::path expr_path = c.out_dir / "expression.tsv";
  write_expression(data.expr, expr_path);

  std::vector<EdgeRecord> truth;
  truth.reserve(data.truth.adjacency.n_edges());
  for (const auto &e : data.truth.adjacency.edges()) {
    EdgeRecord r;
    r.a = e.m;
    r.b = e.n;
    r.weight = data.truth.true_cov(e.m, e.n);
    r.post_null = r.post_pos = r.post_neg = std::numeric_limits<double>::quiet_NaN();
    r.component = r.weight < 0.0 ? Component::Negative : Component::Positive;
    truth.push_back(r);
  }
  const fs::path truth_path = c.out_dir / "truth_edges.tsv";
  write_edge_list(truth, data.expr.gene_ids(), truth_path);
  const fs::path config_path = c.out_dir / "config.json";
  write_json(network_config_to_json(config), config_path);

  manifest.input("config", a.config);
  manifest.output(expr_path);
  manifest.output(truth_path);
  manifest.output(config_path);
  manifest.set("effective_seed", config.seed);

  return {{"command", "simulate"},
          {"family", family_name(config.family)},
          {"n_genes", config.n_genes},
          {"n_samples", config.n_samples},
          {"true_edges", data.truth.adjacency.n_edges()},
          {"sparsity", data.truth.sparsity},
          {"seed", config.seed}};
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  fs::path config;
  std::optional<int> replicates;
  std::optional<double> alpha;
  std::optional<std::string> truth_kind;
  std::optional<int> levels;
  bool curves = false;
};

json cmd_evaluate(const EvaluateArgs &a, const Common &c, Manifest &manifest) {
  const json doc = read_config_file(a.config);
  NetworkConfig config = network_config_from_json(doc);
  ExperimentOptions opts = experiment_options_from_json(doc);
  if (c.seed_given)
    config.seed = c.seed;
  if (a.replicates)
    opts.replicates = *a.replicates;
  if (a.alpha)
    opts.fdr_alpha = *a.alpha;
  if (a.truth_kind)
    opts.truth_kind = parse_truth_kind(*a.truth_kind);
  if (a.levels)
    opts.sweep.levels = *a.levels;
  if (a.curves)
    opts.curves = true;
  opts.threads = c.threads;
  opts.block_size = c.block_size;
  prepare_dir(c.out_dir);

  const ExperimentReport report = run_experiment(config, opts);
  const fs::path report_path = c.out_dir / "report.json";
  write_json(experiment_report_json(report), report_path);
  manifest.input("config", a.config);
  manifest.output(report_path);

  const fs::path reps_path = c.out_dir / "replicates.tsv";
  {
    std::ofstream out(reps_path);
    if (!out)
      throw IoError("cannot open " + reps_path.string());
    out << "replicate\tseed\tok\tp1\tp2\trmse\tc1\tc2\tdetected\ttp\tpower\tobserved_fdr\n";
    for (const auto &r : report.replicates) {
      out << r.index << '\t' << r.seed << '\t' << (r.ok ? 1 : 0);
      if (r.ok)
        out << '\t' << format_double(r.fit.params.p1) << '\t' << format_double(r.fit.params.p2)
            << '\t' << format_double(r.fit.rmse) << '\t' << format_double(r.thresholds.c1)
            << '\t' << format_double(r.thresholds.c2) << '\t' << r.n_detected << '\t'
            << r.score.tp << '\t' << format_double(r.score.power) << '\t'
            << format_double(r.score.observed_fdr);
      else
        out << "\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA";
      out << '\n';
    }
    if (!out)
      throw IoError("write failed for " + reps_path.string());
  }
  manifest.output(reps_path);
  if (!report.mean_curves.empty()) {
    const fs::path curves_path = c.out_dir / "curves.tsv";
    write_curves_tsv(report.mean_curves, curves_path);
    manifest.output(curves_path);
  }

  return {{"command", "evaluate"},
          {"family", family_name(config.family)},
          {"replicates", opts.replicates},
          {"failed", report.n_failed},
          {"mean_power", report.mean_power},
          {"mean_fdr", report.mean_fdr},
          {"mean_p1", report.mean_p1},
          {"mean_p2", report.mean_p2}};
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
  fs::path edges_a;
  std::optional<fs::path> edges_b;
  std::optional<fs::path> expr;
  std::string delimiter = "auto";
};

SparseGraph graph_from_edge_list(const fs::path &path, const std::vector<std::string> &genes) {
  std::vector<GenePair> edges;
  for (const auto &r : parse_edge_list(path, genes))
    edges.push_back({r.a, r.b});
  return SparseGraph(genes.size(), std::move(edges), SparseGraph::Duplicates::Merge);
}

json cmd_stats(const StatsArgs &a, const Common &c, Manifest &manifest) {
  json summary = {{"command", "stats"}};
  std::vector<std::string> genes;
  if (a.expr) {
    genes = read_expression(*a.expr, a.delimiter, true, summary).gene_ids();
    manifest.input("expression", *a.expr);
  } else {
    std::vector<fs::path> lists{a.edges_a};
    if (a.edges_b)
      lists.push_back(*a.edges_b);
    genes = collect_edge_list_genes(lists);
  }
  prepare_dir(c.out_dir);

  const SparseGraph ga = graph_from_edge_list(a.edges_a, genes);
  manifest.input("edges_a", a.edges_a);
  const auto order = bitmap_order(ga);

  auto emit = [&](const SparseGraph &g, const std::string &tag) {
    const auto rows = stats_table(g, c.threads);
    const fs::path stats_path = c.out_dir / ("stats_" + tag + ".tsv");
    write_stats_table(rows, genes, stats_path);
    const fs::path pbm_path = c.out_dir / ("bitmap_" + tag + ".pbm");
    write_pbm(g, order, pbm_path);
    manifest.output(stats_path);
    manifest.output(pbm_path);
    summary["edges_" + tag] = g.n_edges();
  };
  emit(ga, "a");
  summary["nodes"] = genes.size();

  const fs::path order_path = c.out_dir / "bitmap_order.tsv";
  {
    std::ofstream out(order_path);
    if (!out)
      throw IoError("cannot open " + order_path.string());
    out << "position\tnode\tgene_id\n";
    for (std::size_t i = 0; i < order.size(); ++i)
      out << i << '\t' << order[i] << '\t' << genes[order[i]] << '\n';
  }
  manifest.output(order_path);

  if (a.edges_b) {
    const SparseGraph gb = graph_from_edge_list(*a.edges_b, genes);
    manifest.input("edges_b", *a.edges_b);
    emit(gb, "b");
    const auto diff = symmetric_difference_nodes(ga, gb);
    const fs::path diff_path = c.out_dir / "symdiff_nodes.tsv";
    std::ofstream out(diff_path);
    if (!out)
      throw IoError("cannot open " + diff_path.string());
    out << "node\tgene_id\n";
    for (std::size_t node : diff)
      out << node << '\t' << genes[node] << '\n';
    manifest.output(diff_path);
    summary["symmetric_difference_nodes"] = diff.size();
  }
  return summary;
}

json error_json(const std::string &code, const std::string &category, const std::string &message) {
  return {{"error", code}, {"category", category}, {"message", message}};
}

const char *category_name(ErrorCategory c) {
  switch (c) {
  case ErrorCategory::InvalidInput:
    return "invalid_input";
  case ErrorCategory::Numeric:
    return "numeric";
  case ErrorCategory::Io:
    return "io";
  }
  return "unknown";
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Sparse co-expression networks from an L2N mixture fit to Fisher-z weights",
               "l2net"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  FitArgs fit_args;
  InferArgs infer_args;
  SimulateArgs sim_args;
  EvaluateArgs eval_args;
  StatsArgs stats_args;

  auto *fit = app.add_subcommand("fit", "Fit the mixture on a random subset of genes");
  fit->add_option("expression", fit_args.expr, "Genes x samples TSV/CSV")->required();
  fit->add_option("--g-prime", fit_args.g_prime, "Genes used for fitting (default min(1000, G))");
  fit->add_option("--restarts", fit_args.restarts, "Extra EM runs from jittered starts")
      ->check(CLI::NonNegativeNumber);
  fit->add_option("--tol", fit_args.tol, "Relative log-likelihood tolerance")
      ->check(CLI::PositiveNumber);
  fit->add_option("--max-iter", fit_args.max_iter, "Maximum EM iterations")
      ->check(CLI::PositiveNumber);
  fit->add_option("--rmse-bins", fit_args.rmse_bins, "Histogram bins for the rMSE")
      ->check(CLI::Range(10, 1000000));
  fit->add_option("--delimiter", fit_args.delimiter, "auto, tab or comma");
  fit->add_flag("--drop-missing", fit_args.drop_missing, "Drop genes with missing values");
  add_common(*fit, common);

  auto *infer = app.add_subcommand("infer", "Classify every gene pair and write the edge list");
  infer->add_option("expression", infer_args.expr, "Genes x samples TSV/CSV")->required();
  infer->add_option("--fit", infer_args.fit, "fit_report.json from the fit command")->required();
  infer->add_option("--rule", infer_args.rule, "ratio:T, type1:alpha or fdr:alpha");
  infer->add_option("--weight-cache", infer_args.weight_cache,
                    "Binary weight cache; read if present, written otherwise");
  infer->add_option("--delimiter", infer_args.delimiter, "auto, tab or comma");
  infer->add_flag("--drop-missing", infer_args.drop_missing, "Drop genes with missing values");
  add_common(*infer, common);

  auto *sim = app.add_subcommand("simulate", "Generate a synthetic network and expression data");
  sim->add_option("config", sim_args.config, "Network config (TOML or JSON)")->required();
  add_common(*sim, common);

  auto *eval = app.add_subcommand("evaluate", "Run replicated simulate/fit/infer/score");
  eval->add_option("config", eval_args.config, "Network config (TOML or JSON)")->required();
  eval->add_option("--replicates", eval_args.replicates, "Replicates")->check(CLI::PositiveNumber);
  eval->add_option("--alpha", eval_args.alpha, "FDR level");
  eval->add_option("--truth-kind", eval_args.truth_kind, "adjacency or cov_threshold");
  eval->add_option("--levels", eval_args.levels, "Sweep levels per curve")
      ->check(CLI::Range(2, 100000));
  eval->add_flag("--curves", eval_args.curves, "Also compute true-positive curves");
  add_common(*eval, common);

  auto *stats = app.add_subcommand("stats", "Node statistics, bitmaps and graph differences");
  stats->add_option("edges_a", stats_args.edges_a, "Edge list TSV")->required();
  stats->add_option("edges_b", stats_args.edges_b, "Second edge list TSV");
  stats->add_option("--expression", stats_args.expr, "Expression file fixing the gene set");
  stats->add_option("--delimiter", stats_args.delimiter, "auto, tab or comma");
  add_common(*stats, common);

  std::vector<const char *> argv;
  for (const auto &a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &e) {
    err << app.help();
    return 0;
  } catch (const CLI::CallForVersion &e) {
    err << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError &e) {
    out << error_json("Usage", "invalid_input", e.what()).dump() << '\n';
    return 2;
  }

  const std::vector<std::string> recorded(args.begin() + (args.empty() ? 0 : 1), args.end());
  try {
    json summary;
    Manifest manifest(app.get_subcommands().front()->get_name(), recorded);
    if (fit->parsed())
      summary = cmd_fit(fit_args, common, manifest);
    else if (infer->parsed())
      summary = cmd_infer(infer_args, common, manifest);
    else if (sim->parsed())
      summary = cmd_simulate(sim_args, common, manifest);
    else if (eval->parsed())
      summary = cmd_evaluate(eval_args, common, manifest);
    else
      summary = cmd_stats(stats_args, common, manifest);
    manifest.write(common);
    out << summary.dump() << '\n';
    return 0;
  } catch (const Error &e) {
    out << error_json(e.code(), category_name(e.category()), e.what()).dump() << '\n';
    return exit_code_for(e.category());
  } catch (const std::bad_alloc &) {
    out << error_json("OutOfMemory", "numeric", "allocation failed").dump() << '\n';
    return 3;
  } catch (const std::exception &e) {
    out << error_json("Internal", "internal", e.what()).dump() << '\n';
    return 1;
  }
}

} // namespace l2net::cli
