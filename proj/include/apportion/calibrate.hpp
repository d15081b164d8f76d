#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apportion/building_estimate.hpp"

namespace apportion {

struct LinearFit {
  std::vector<double> slopes;  ///< one per feature column
  double intercept = 0.0;

  double predict(std::span<const double> x) const;
};

/// Ordinary least squares with intercept via centered, scaled normal equations.
/// Requires n >= p + 2. Throws Error naming the first column that is constant
/// or collinear with earlier columns (pivot below 1e-10 on the scaled Gram).
LinearFit fit_linear(std::span<const std::vector<double>> columns,
                     std::span<const std::string> names, std::span<const double> y);

/// Minimum number of complete rows for a sub-model fit: one day at 15 minutes.
inline constexpr std::size_t kMinFitRows = 96;

struct FitDiagnostics {
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double train_rmse = 0.0;
  double train_baseline_rmse = 0.0;
  /// Mean of the target over the training rows; the mean-power baseline.
  double baseline_mean = 0.0;
  std::optional<double> test_rmse;
  std::optional<double> test_baseline_rmse;

  /// 100 (1 - test_rmse / test_baseline_rmse); absent when either is missing
  /// or the baseline error is zero.
  std::optional<double> improvement_pct() const;
};

enum class SubModelKind { VavCooling, AhuCooling, Heating };

std::string_view to_string(SubModelKind kind);

struct SubModel {
  SubModelKind kind;
  /// Feature columns of the frame, in coefficient order.
  std::vector<std::string> features;
  LinearFit fit;
  FitDiagnostics diagnostics;
};

/// Regression coefficients c1..c8 with diagnostics.
///   VAV cooling:  c1 sum Q_vav_clg + c2 sum economizer + c3 = Q_cooling
///   AHU cooling:  c4 sum Q_ahu_clg + c5 = Q_cooling   (cooling-mode rows)
///   heating:      c6 sum Q_ahu_htg + c7 sum Q_vav_htg + c8 = Q_heating
struct CalibratedModel {
  std::optional<SubModel> vav_cooling;
  std::optional<SubModel> ahu_cooling;
  std::optional<SubModel> heating;
  Window train_window;
  Window test_window;
  PhysicalConstants constants;
  std::vector<std::string> warnings;

  /// Coefficient i in 1..8; absent when its sub-model was not fitted or, for
  /// c7, when the building has no reheat.
  std::optional<double> c(int i) const;
  bool complete() const { return vav_cooling && ahu_cooling && heating; }
};

/// Rows of the estimate used by each sub-model within a window.
std::vector<std::size_t> vav_cooling_rows(const BuildingEstimate& est, std::optional<Window> w = {});
std::vector<std::size_t> ahu_cooling_rows(const BuildingEstimate& est, std::optional<Window> w = {});
std::vector<std::size_t> heating_rows(const BuildingEstimate& est, std::optional<Window> w = {});

SubModel fit_cooling_vav(const BuildingEstimate& est, Window window);
SubModel fit_cooling_ahu(const BuildingEstimate& est, Window window);
/// Drops the VAV reheat term when the building has no reheat coils.
SubModel fit_heating(const BuildingEstimate& est, Window window);

/// Predicted meter value for a sub-model at the given rows.
std::vector<double> predict(const SubModel& m, const BuildingEstimate& est,
                            std::span<const std::size_t> rows);

/// Chronological split at `train_fraction` of the frame, fits all three sub-models
/// on the first part and evaluates on the rest. A sub-model that cannot be fitted
/// is left empty and its error is recorded as a warning. Negative c1, c4, c6 or c7
/// are flagged.
CalibratedModel calibrate(const BuildingEstimate& est, double train_fraction = 0.7);

/// Fills test diagnostics for each fitted sub-model. Throws Error when the test
/// window is empty or overlaps the train window.
void evaluate(CalibratedModel& model, const BuildingEstimate& est, Window test_window);

void write_model(const std::filesystem::path& path, const CalibratedModel& model);
CalibratedModel read_model(const std::filesystem::path& path);
std::string model_to_json(const CalibratedModel& model);
CalibratedModel model_from_json(std::string_view text);

}  // namespace apportion
