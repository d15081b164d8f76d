#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apportion/calibrate.hpp"
#include "apportion/faults.hpp"

namespace apportion {

enum class ImpactMethod { SetpointIdeal, ModelIdeal, NotEstimable };

std::string_view to_string(ImpactMethod m);

/// Minimum finding span for loss estimation: one week.
inline constexpr Seconds kMinImpactSpan = 7 * kDay;

struct DailyLoss {
  Timestamp day;     ///< start of the 24 h chunk
  double loss = 0.0; ///< MMBTU, signed
  std::optional<double> mean_oat;
};

struct LossEstimate {
  ImpactMethod method = ImpactMethod::NotEstimable;
  /// Sum of faulty minus ideal over the window, MMBTU, clamped at zero.
  /// Absent when not estimable.
  std::optional<double> loss;
  /// Signed per-day sums, in 24 h chunks from the window start.
  std::vector<DailyLoss> daily;
  std::string note;
};

/// Energy wasted over the finding window: the faulty operating state minus the
/// rule's ideal state, both evaluated with the calibrated coefficients.
///   damper stuck   flow -> flow setpoint                 c1 (+ c7 reheat)
///   config error   flow -> q_min while the rule applies  c1 (+ c7 reheat)
///   cooling valve  T_SA -> T_MA while the valve is shut  c4
///   heating valve  T_SA -> T_MA while the valve is shut  c6
///   economizer     measured T_MA -> estimated T_MA       c4, c6
/// Throws Error when the window is shorter than kMinImpactSpan.
LossEstimate fault_energy_loss(const FaultFinding& finding, const CalibratedModel& model,
                               const BuildingEstimate& est, const EquipmentGraph& graph,
                               double min_coverage = 0.5);

struct Annualized {
  double annual = 0.0;  ///< MMBTU/year, never negative
  double slope = 0.0;
  double intercept = 0.0;
  double r = 0.0;
  /// |r| below kMinAnnualCorrelation: mean daily loss x 365.
  bool flat = false;
};

inline constexpr double kMinAnnualCorrelation = 0.3;
inline constexpr std::size_t kMinAnnualDays = 7;

/// Fits daily_loss = slope * oat + intercept and sums max(0, fit) over the
/// reference year. Throws Error for fewer than kMinAnnualDays pairs.
Annualized annualize(std::span<const double> daily_losses, std::span<const double> daily_oat,
                     std::span<const double> reference_year_oat);

/// Daily-mean outside-air temperature for days 1..365.
std::vector<double> read_reference_year(const std::filesystem::path& path);
std::vector<double> parse_reference_year(std::string_view csv_text);

struct ImpactEstimate {
  FaultFinding finding;
  LossEstimate loss;
  std::optional<Annualized> annual;
  std::string note;

  bool estimable() const { return annual.has_value(); }
};

/// Loss plus annualization for one finding; failures produce a not-estimable
/// entry with a note rather than an exception.
ImpactEstimate assess(const FaultFinding& finding, const CalibratedModel& model,
                      const BuildingEstimate& est, const EquipmentGraph& graph,
                      std::span<const double> reference_year_oat, double min_coverage = 0.5);

/// Estimable impacts by descending annual loss, ties by (rule, equipment);
/// not-estimable ones follow in (rule, equipment) order.
std::vector<ImpactEstimate> prioritize(std::vector<ImpactEstimate> impacts);

}  // namespace apportion
