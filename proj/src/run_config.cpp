#include "apportion/run_config.hpp"

#include <fstream>
#include <sstream>

#include <boost/algorithm/string/split.hpp>
#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "apportion/error.hpp"

namespace apportion {

namespace pt = boost::property_tree;

std::vector<std::filesystem::path> RunConfig::trend_inputs() const {
  auto all = trends;
  if (weather) all.push_back(*weather);
  return all;
}

void RunConfig::redirect_outputs(const std::filesystem::path& dir) {
  output = dir;
  model = dir / model.filename();
  findings = dir / findings.filename();
}

namespace {

template <class T>
T required(const pt::ptree& tree, const std::string& key) {
  auto v = tree.get_optional<std::string>(key);
  if (!v) throw Error("config: missing key '" + key + "'");
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_error&) {
    throw Error("config: bad value '" + *v + "' for '" + key + "'");
  }
}

template <class T>
T optional_key(const pt::ptree& tree, const std::string& key, T fallback) {
  auto v = tree.get_optional<std::string>(key);
  if (!v) return fallback;
  try {
    return tree.get<T>(key);
  } catch (const pt::ptree_error&) {
    throw Error("config: bad value '" + *v + "' for '" + key + "'");
  }
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  const auto path = [&](const std::string& key) { return base_dir / required<std::string>(tree, key); };
  const auto maybe_path = [&](const std::string& key) -> std::optional<std::filesystem::path> {
    if (auto v = tree.get_optional<std::string>(key); v && !v->empty()) return base_dir / *v;
    return std::nullopt;
  };

  RunConfig cfg;
  cfg.topology = path("paths.topology");
  cfg.points = path("paths.points");
  std::vector<std::string> parts;
  const auto trends = required<std::string>(tree, "paths.trends");
  boost::algorithm::split(parts, trends, [](char c) { return c == ','; });
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    if (!p.empty()) cfg.trends.push_back(base_dir / p);
  }
  if (cfg.trends.empty()) throw Error("config: [paths] trends lists no files");
  cfg.weather = maybe_path("paths.weather");
  cfg.reference_weather = maybe_path("paths.reference_weather");
  cfg.output = maybe_path("paths.output").value_or(base_dir);
  cfg.model = maybe_path("paths.model").value_or(cfg.output / "model.json");
  cfg.findings = maybe_path("paths.findings").value_or(cfg.output / "findings.csv");

  cfg.constants.air_power_k = optional_key(tree, "constants.air_power_k", cfg.constants.air_power_k);
  cfg.constants.deadband_f = optional_key(tree, "constants.deadband_f", cfg.constants.deadband_f);
  cfg.constants.validate();
  const long interval = optional_key<long>(tree, "constants.interval_s", 900);
  if (interval <= 0) throw Error("config: interval_s must be positive");
  cfg.interval = Seconds{interval};

  cfg.train_fraction = optional_key(tree, "fit.train_fraction", cfg.train_fraction);
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw Error("config: train_fraction must lie in (0, 1)");
  }
  cfg.allow_partial = optional_key(tree, "fit.allow_partial", cfg.allow_partial);

  auto& th = cfg.thresholds;
  th.correlation_min = required<double>(tree, "thresholds.correlation_min");
  th.cooling_mpe_max = required<double>(tree, "thresholds.cooling_mpe_max");
  th.heating_mpe_min = required<double>(tree, "thresholds.heating_mpe_min");
  th.occupied_flow_slack = required<double>(tree, "thresholds.occupied_flow_slack");
  th.damper_rmspe_max = required<double>(tree, "thresholds.damper_rmspe_max");
  const double days = required<double>(tree, "thresholds.min_persistence_days");
  th.min_persistence = Seconds{static_cast<long>(days * 86400.0 + 0.5)};
  th.min_coverage = required<double>(tree, "thresholds.min_coverage");
  th.min_damper_range = optional_key(tree, "thresholds.min_damper_range", th.min_damper_range);
  th.config_violation_fraction =
      optional_key(tree, "thresholds.config_violation_fraction", th.config_violation_fraction);
  th.valve_closed_max = optional_key(tree, "thresholds.valve_closed_max", th.valve_closed_max);
  th.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

}  // namespace apportion
