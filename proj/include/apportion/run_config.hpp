#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "apportion/energy.hpp"
#include "apportion/faults.hpp"

namespace apportion {

/// Sectioned INI run configuration; relative paths resolve against the
/// directory of the config file. Schema in docs/formats.md.
struct RunConfig {
  std::filesystem::path topology;
  std::filesystem::path points;
  std::vector<std::filesystem::path> trends;
  std::optional<std::filesystem::path> weather;
  std::optional<std::filesystem::path> reference_weather;
  std::filesystem::path model;
  std::filesystem::path findings;
  std::filesystem::path output;

  PhysicalConstants constants;
  Seconds interval{900};
  double train_fraction = 0.7;
  /// Accept a model with a missing sub-model instead of failing the fit.
  bool allow_partial = false;
  Thresholds thresholds;

  /// Trend files followed by the weather file, if any.
  std::vector<std::filesystem::path> trend_inputs() const;
  /// Redirects every output (model, findings, reports) into `dir`.
  void redirect_outputs(const std::filesystem::path& dir);
};

/// Throws Error for missing mandatory keys or bad values.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir);
/// Throws IoError when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace apportion
