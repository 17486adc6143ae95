#pragma once

#include "l2net/edge_decision.hpp"
#include "l2net/eval_harness.hpp"
#include "l2net/l2n_mixture.hpp"

#include <json.hpp>

#include <filesystem>

namespace l2net {

/// Finite values become numbers; +-inf become "inf"/"-inf" and NaN "nan".
nlohmann::json number_json(double v);
/// Inverse of number_json.
double number_from_json(const nlohmann::json &v);

nlohmann::json params_json(const L2NParams &params);
L2NParams params_from_json(const nlohmann::json &doc);

/// Flat object: the parameter fields plus n_iterations, rmse,
/// subsample_seed, subsample_size, loglik_trace and warnings.
nlohmann::json fit_report_json(const FitReport &report);
FitReport fit_report_from_json(const nlohmann::json &doc);

/// {rule, T_or_alpha, c1, c2, est_type1, est_type2, est_fdr, power, warnings}.
nlohmann::json decision_json(const Thresholds &thresholds);

nlohmann::json score_json(const Score &score);
nlohmann::json curve_json(const ScoreCurve &curve);
nlohmann::json experiment_report_json(const ExperimentReport &report);

/// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json &doc, const std::filesystem::path &path);
nlohmann::json read_json(const std::filesystem::path &path);

} // namespace l2net
