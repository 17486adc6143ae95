#include "l2net/report_json.hpp"

#include "l2net/config.hpp"
#include "l2net/errors.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace l2net {

namespace {

const nlohmann::json &field(const nlohmann::json &doc, const char *key) {
  if (!doc.is_object() || !doc.contains(key))
    throw InputError("ParseError", std::string("fit report lacks field '") + key + "'");
  return doc.at(key);
}

nlohmann::json strings_json(const std::vector<std::string> &items) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &s : items)
    out.push_back(s);
  return out;
}

} // namespace

nlohmann::json number_json(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const nlohmann::json &v) {
  if (v.is_number())
    return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf")
      return std::numeric_limits<double>::infinity();
    if (s == "-inf")
      return -std::numeric_limits<double>::infinity();
    if (s == "nan")
      return std::numeric_limits<double>::quiet_NaN();
  }
  throw InputError("ParseError", "expected a number, got " + v.dump());
}

nlohmann::json params_json(const L2NParams &p) {
  return {{"p0", p.p0},
          {"p1", p.p1},
          {"p2", p.p2},
          {"sigma0_sq", p.sigma0_sq},
          {"theta1", p.theta1},
          {"kappa1_sq", p.kappa1_sq},
          {"theta2", p.theta2},
          {"kappa2_sq", p.kappa2_sq},
          {"n_samples", p.n_samples}};
}

L2NParams params_from_json(const nlohmann::json &doc) {
  L2NParams p;
  try {
    p.p0 = number_from_json(field(doc, "p0"));
    p.p1 = number_from_json(field(doc, "p1"));
    p.p2 = number_from_json(field(doc, "p2"));
    p.sigma0_sq = number_from_json(field(doc, "sigma0_sq"));
    p.theta1 = number_from_json(field(doc, "theta1"));
    p.kappa1_sq = number_from_json(field(doc, "kappa1_sq"));
    p.theta2 = number_from_json(field(doc, "theta2"));
    p.kappa2_sq = number_from_json(field(doc, "kappa2_sq"));
    p.n_samples = field(doc, "n_samples").get<int>();
  } catch (const nlohmann::json::exception &e) {
    throw InputError("ParseError", std::string("malformed parameters: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json fit_report_json(const FitReport &r) {
  nlohmann::json doc = params_json(r.params);
  doc["n_iterations"] = r.n_iterations;
  doc["rmse"] = number_json(r.rmse);
  doc["subsample_seed"] = r.subsample_seed;
  doc["subsample_size"] = r.subsample_size;
  nlohmann::json trace = nlohmann::json::array();
  for (double v : r.loglik_trace)
    trace.push_back(number_json(v));
  doc["loglik_trace"] = std::move(trace);
  doc["warnings"] = strings_json(r.warnings);
  return doc;
}

FitReport fit_report_from_json(const nlohmann::json &doc) {
  FitReport r;
  r.params = params_from_json(doc);
  try {
    r.n_iterations = field(doc, "n_iterations").get<int>();
    r.rmse = number_from_json(field(doc, "rmse"));
    r.subsample_seed = field(doc, "subsample_seed").get<std::uint64_t>();
    r.subsample_size = field(doc, "subsample_size").get<std::size_t>();
    for (const auto &v : field(doc, "loglik_trace"))
      r.loglik_trace.push_back(number_from_json(v));
    if (doc.contains("warnings"))
      r.warnings = doc.at("warnings").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    throw InputError("ParseError", std::string("malformed fit report: ") + e.what());
  }
  return r;
}

nlohmann::json decision_json(const Thresholds &t) {
  return {{"rule", t.rule.name()},
          {"T_or_alpha", t.rule.value},
          {"c1", number_json(t.c1)},
          {"c2", number_json(t.c2)},
          {"est_type1", number_json(t.est_type1)},
          {"est_type2", number_json(t.est_type2)},
          {"est_fdr", number_json(t.est_fdr)},
          {"power", number_json(t.power())},
          {"warnings", strings_json(t.warnings)}};
}

nlohmann::json score_json(const Score &s) {
  return {{"tp", s.tp},
          {"fp", s.fp},
          {"fn", s.fn},
          {"observed_fdr", s.observed_fdr},
          {"power", s.power}};
}

nlohmann::json curve_json(const ScoreCurve &c) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto &p : c.points)
    pts.push_back({number_json(p.total_detected), number_json(p.true_positives)});
  return {{"method", c.method},
          {"truth_kind", truth_kind_name(c.truth_kind)},
          {"n_true_edges", c.n_true_edges},
          {"points", std::move(pts)}};
}

nlohmann::json experiment_report_json(const ExperimentReport &report) {
  nlohmann::json reps = nlohmann::json::array();
  for (const auto &r : report.replicates) {
    nlohmann::json rep = {{"index", r.index}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      rep["fit"] = params_json(r.fit.params);
      rep["rmse"] = number_json(r.fit.rmse);
      rep["n_iterations"] = r.fit.n_iterations;
      rep["decision"] = decision_json(r.thresholds);
      rep["score"] = score_json(r.score);
      rep["n_true_edges"] = r.n_true_edges;
      rep["n_detected"] = r.n_detected;
      nlohmann::json curves = nlohmann::json::array();
      for (const auto &c : r.curves)
        curves.push_back(curve_json(c));
      rep["curves"] = std::move(curves);
    } else {
      rep["error"] = {{"code", r.error_code}, {"message", r.error_message}};
    }
    reps.push_back(std::move(rep));
  }
  nlohmann::json mean_curves = nlohmann::json::array();
  for (const auto &c : report.mean_curves)
    mean_curves.push_back(curve_json(c));
  return {{"config", network_config_to_json(report.config)},
          {"replicates_requested", report.options.replicates},
          {"fdr_alpha", report.options.fdr_alpha},
          {"truth_kind", truth_kind_name(report.options.truth_kind)},
          {"n_failed", report.n_failed},
          {"mean_power", report.mean_power},
          {"mean_fdr", report.mean_fdr},
          {"mean_p1", report.mean_p1},
          {"mean_p2", report.mean_p2},
          {"mean_rmse", report.mean_rmse},
          {"mean_curves", std::move(mean_curves)},
          {"replicates", std::move(reps)}};
}

void write_json(const nlohmann::json &doc, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out)
    throw IoError("write failed for " + path.string());
}

nlohmann::json read_json(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw InputError("ParseError", path.string() + ": " + e.what());
  }
}

} // namespace l2net
