#include "l2net/config.hpp"

#include "l2net/errors.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace l2net {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_config(const std::string &what) { throw InputError("InvalidParam", what); }

/// Drops a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string &line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (quote == 0 && (line[i] == '"' || line[i] == '\''))
      quote = line[i];
    else if (line[i] == quote)
      quote = 0;
    else if (line[i] == '#' && quote == 0)
      return line.substr(0, i);
  }
  return line;
}

nlohmann::json toml_value(const std::string &raw, std::size_t line_no) {
  const std::string v = trim(raw);
  for (char quote : {'"', '\''})
    if (v.size() >= 2 && v.front() == quote && v.back() == quote)
      return v.substr(1, v.size() - 2);
  if (v == "true")
    return true;
  if (v == "false")
    return false;
  std::string digits;
  for (char c : v)
    if (c != '_')
      digits.push_back(c);
  try {
    std::size_t used = 0;
    const bool integral = digits.find_first_of(".eEn") == std::string::npos;
    if (integral && !digits.empty() && digits[0] != '-') {
      const unsigned long long u = std::stoull(digits, &used);
      if (used == digits.size())
        return static_cast<std::uint64_t>(u);
    } else if (integral) {
      const long long s = std::stoll(digits, &used);
      if (used == digits.size())
        return static_cast<std::int64_t>(s);
    }
    const double d = std::stod(digits, &used);
    if (used == digits.size())
      return d;
  } catch (const std::exception &) {
  }
  bad_config("unsupported value '" + v + "' on config line " + std::to_string(line_no));
}

template <class T> T get_as(const nlohmann::json &value, const std::string &key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception &) {
    bad_config("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_count(const nlohmann::json &value, const std::string &key) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0)
    bad_config("config key '" + key + "' must be a nonnegative integer");
  return value.get<std::size_t>();
}

} // namespace

nlohmann::json parse_toml_subset(const std::string &text) {
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json *table = &root;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(strip_comment(line));
    if (s.empty())
      continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        bad_config("malformed table header on config line " + std::to_string(line_no));
      const std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty())
        bad_config("empty table name on config line " + std::to_string(line_no));
      table = &root[name];
      if (table->is_null())
        *table = nlohmann::json::object();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      bad_config("expected key = value on config line " + std::to_string(line_no));
    std::string key = trim(s.substr(0, eq));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"')
      key = key.substr(1, key.size() - 2);
    if (key.empty())
      bad_config("empty key on config line " + std::to_string(line_no));
    if (table->contains(key))
      bad_config("duplicate key '" + key + "' on config line " + std::to_string(line_no));
    (*table)[key] = toml_value(s.substr(eq + 1), line_no);
  }
  return root;
}

nlohmann::json read_config_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (path.extension() == ".json") {
    try {
      return nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error &e) {
      throw InputError("ParseError", "config " + path.string() + ": " + e.what());
    }
  }
  return parse_toml_subset(buffer.str());
}

NetworkConfig network_config_from_json(const nlohmann::json &doc) {
  if (!doc.is_object())
    bad_config("config must be an object");
  const nlohmann::json &net = doc.contains("network") ? doc.at("network") : doc;
  NetworkConfig c;
  for (const auto &[key, value] : net.items()) {
    if (key == "network" || key == "experiment")
      continue;
    if (key == "family")
      c.family = parse_family(get_as<std::string>(value, key));
    else if (key == "n_genes" || key == "G")
      c.n_genes = get_count(value, key);
    else if (key == "n_samples" || key == "N")
      c.n_samples = static_cast<int>(get_count(value, key));
    else if (key == "block_size" || key == "S")
      c.block_size = get_count(value, key);
    else if (key == "edge_prob" || key == "p")
      c.edge_prob = get_as<double>(value, key);
    else if (key == "groups" || key == "g")
      c.groups = get_count(value, key);
    else if (key == "v")
      c.v = get_as<double>(value, key);
    else if (key == "u")
      c.u = get_as<double>(value, key);
    else if (key == "theta1")
      c.theta1 = get_as<double>(value, key);
    else if (key == "kappa1_sq")
      c.kappa1_sq = get_as<double>(value, key);
    else if (key == "theta2")
      c.theta2 = get_as<double>(value, key);
    else if (key == "kappa2_sq")
      c.kappa2_sq = get_as<double>(value, key);
    else if (key == "null_sd")
      c.null_sd = get_as<double>(value, key);
    else if (key == "ba_edges_per_node" || key == "m")
      c.ba_edges_per_node = get_count(value, key);
    else if (key == "ba_seed_size")
      c.ba_seed_size = get_count(value, key);
    else if (key == "seed")
      c.seed = get_as<std::uint64_t>(value, key);
    else if (key == "g_prime")
      c.g_prime = get_count(value, key);
    else
      bad_config("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

nlohmann::json network_config_to_json(const NetworkConfig &c) {
  return {{"family", family_name(c.family)},
          {"n_genes", c.n_genes},
          {"n_samples", c.n_samples},
          {"block_size", c.block_size},
          {"edge_prob", c.edge_prob},
          {"groups", c.groups},
          {"v", c.v},
          {"u", c.u},
          {"theta1", c.theta1},
          {"kappa1_sq", c.kappa1_sq},
          {"theta2", c.theta2},
          {"kappa2_sq", c.kappa2_sq},
          {"null_sd", c.null_sd},
          {"ba_edges_per_node", c.ba_edges_per_node},
          {"ba_seed_size", c.ba_seed_size},
          {"seed", c.seed},
          {"g_prime", c.g_prime}};
}

ExperimentOptions experiment_options_from_json(const nlohmann::json &doc,
                                               ExperimentOptions opts) {
  if (!doc.is_object() || !doc.contains("experiment"))
    return opts;
  for (const auto &[key, value] : doc.at("experiment").items()) {
    if (key == "replicates")
      opts.replicates = static_cast<int>(get_count(value, key));
    else if (key == "fdr_alpha")
      opts.fdr_alpha = get_as<double>(value, key);
    else if (key == "truth_kind")
      opts.truth_kind = parse_truth_kind(get_as<std::string>(value, key));
    else if (key == "curves")
      opts.curves = get_as<bool>(value, key);
    else if (key == "levels")
      opts.sweep.levels = static_cast<int>(get_count(value, key));
    else if (key == "max_total")
      opts.sweep.max_total = get_count(value, key);
    else
      bad_config("unknown experiment key '" + key + "'");
  }
  return opts;
}

NetworkConfig load_network_config(const std::filesystem::path &path) {
  return network_config_from_json(read_config_file(path));
}

} // namespace l2net
