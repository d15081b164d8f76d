#pragma once

#include <optional>
#include <string>
#include <vector>

#include "apportion/building_estimate.hpp"
#include "apportion/building_model.hpp"

namespace apportion {

/// Rule thresholds. The first seven are mandatory in the run config.
struct Thresholds {
  double correlation_min = 0.5;      ///< economizer: fault if pearson < this
  double cooling_mpe_max = -5.0;     ///< cooling valve: fault if MPE(T_SA, T_MA) < this, percent
  double heating_mpe_min = 5.0;      ///< heating valve: fault if MPE(T_SA, T_MA) > this, percent
  double occupied_flow_slack = 1.1;  ///< config error: violation if q > slack * q_min
  double damper_rmspe_max = 20.0;    ///< damper: fault if RMSPE(q, q_sp) > this, percent
  Seconds min_persistence = 7 * kDay;
  double min_coverage = 0.5;

  double min_damper_range = 0.2;           ///< economizer needs this much damper travel
  double config_violation_fraction = 0.9;  ///< config error: fault if violating share > this
  double valve_closed_max = 0.01;          ///< a valve command at or below this is closed

  /// Throws Error on out-of-range values.
  void validate() const;
};

enum class RuleId {
  EconomizerBroken = 1,
  CoolingValveLeak = 2,
  HeatingValveLeak = 3,
  ConfigurationError = 4,
  DamperStuck = 5,
};

inline constexpr RuleId kAllRules[] = {RuleId::EconomizerBroken, RuleId::CoolingValveLeak,
                                       RuleId::HeatingValveLeak, RuleId::ConfigurationError,
                                       RuleId::DamperStuck};

int rule_number(RuleId rule);
RuleId rule_from_number(int n);
/// Possible fault named by the rule, e.g. "Economizer damper broken".
std::string_view rule_label(RuleId rule);
/// True when the rule applies to VAVs rather than AHUs.
bool rule_targets_vav(RuleId rule);

enum class Verdict { Healthy, Fault, Inconclusive };

std::string_view to_string(Verdict v);

struct RuleResult {
  RuleId rule = RuleId::EconomizerBroken;
  std::string equipment;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> statistic;
  double threshold = 0.0;
  std::string reason;  ///< why the verdict is inconclusive
  std::size_t samples = 0;
  std::vector<std::string> evidence;  ///< frame columns the statistic was computed from
};

// Single-window rule evaluations. Rule preconditions that cannot be met (an
// unbound point, an unset configuration constant) throw Error.

RuleResult rule_economizer(const BuildingEstimate& est, const std::string& ahu, Window window,
                           const Thresholds& th);
RuleResult rule_cooling_valve_leak(const BuildingEstimate& est, const std::string& ahu,
                                   Window window, const Thresholds& th);
RuleResult rule_heating_valve_leak(const BuildingEstimate& est, const std::string& ahu,
                                   Window window, const Thresholds& th);
RuleResult rule_config_error(const BuildingEstimate& est, const EquipmentGraph& graph,
                             const std::string& vav, Window window, const Thresholds& th);
RuleResult rule_damper_stuck(const BuildingEstimate& est, const std::string& vav, Window window,
                             const Thresholds& th);

RuleResult evaluate_rule(RuleId rule, const BuildingEstimate& est, const EquipmentGraph& graph,
                         const std::string& equipment, Window window, const Thresholds& th);

/// Occupancy per row: the VAV's occupancy point when bound, else the schedule.
std::vector<Sample> occupancy(const BuildingEstimate& est, const EquipmentGraph& graph,
                              const std::string& vav);
/// Per-row minimum flow / zone upper limit: bound point, else configured constant.
/// Throws Error when neither exists.
std::vector<Sample> min_flow(const BuildingEstimate& est, const EquipmentGraph& graph,
                             const std::string& vav);
std::vector<Sample> upper_limit(const BuildingEstimate& est, const EquipmentGraph& graph,
                                const std::string& vav);

struct FaultFinding {
  RuleId rule;
  std::string equipment;
  /// Maximal span covered by consecutive violating windows.
  Window window;
  /// Most extreme statistic over the violating windows.
  double statistic = 0.0;
  double threshold = 0.0;
  Seconds persistence{0};
  std::vector<std::string> evidence;
};

struct InconclusiveEntry {
  RuleId rule;
  std::string equipment;
  std::string reason;
  std::size_t windows = 0;  ///< windows with this outcome
};

struct Detection {
  std::vector<FaultFinding> findings;  ///< sorted by rule, then equipment
  std::vector<InconclusiveEntry> inconclusive;
  std::vector<std::string> warnings;
};

/// Evaluates every rule on every applicable piece of equipment over sliding
/// windows of length min_persistence stepped daily (plus one window ending at
/// `window.end`), and emits at most one finding per (rule, equipment).
Detection run_all(const BuildingEstimate& est, const EquipmentGraph& graph, Window window,
                  const Thresholds& th);

}  // namespace apportion
