#pragma once

#include "l2net/eval_harness.hpp"
#include "l2net/netgen.hpp"

#include <json.hpp>

#include <filesystem>

namespace l2net {

/// Parses the TOML subset used by config files: `key = value` pairs with
/// string, integer, float and boolean values, `[table]` headers and `#`
/// comments. Tables become nested objects.
nlohmann::json parse_toml_subset(const std::string &text);

/// Reads a config file as JSON (".json") or the TOML subset (anything else).
nlohmann::json read_config_file(const std::filesystem::path &path);

/// Network keys may sit at the top level or under a "network" table. Short
/// aliases G, N, S, p, g and m are accepted. Unknown keys are rejected.
NetworkConfig network_config_from_json(const nlohmann::json &doc);
nlohmann::json network_config_to_json(const NetworkConfig &config);

/// Reads the optional "experiment" table (replicates, fdr_alpha, truth_kind,
/// curves, levels, max_total) over `defaults`.
ExperimentOptions experiment_options_from_json(const nlohmann::json &doc,
                                               ExperimentOptions defaults = {});

NetworkConfig load_network_config(const std::filesystem::path &path);

} // namespace l2net
