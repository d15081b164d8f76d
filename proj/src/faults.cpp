#include "apportion/faults.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "apportion/error.hpp"
#include "apportion/statistics.hpp"

namespace apportion {

void Thresholds::validate() const {
  if (!(correlation_min > -1.0 && correlation_min < 1.0)) {
    throw Error("thresholds: correlation_min must lie in (-1, 1)");
  }
  if (!(damper_rmspe_max > 0.0)) throw Error("thresholds: damper_rmspe_max must be positive");
  if (min_persistence < kDay) throw Error("thresholds: min_persistence must be at least 1 day");
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
    throw Error("thresholds: min_coverage must lie in [0, 1]");
  }
  if (!(occupied_flow_slack > 0.0)) throw Error("thresholds: occupied_flow_slack must be positive");
  if (!(config_violation_fraction >= 0.0 && config_violation_fraction < 1.0)) {
    throw Error("thresholds: config_violation_fraction must lie in [0, 1)");
  }
  if (!(min_damper_range >= 0.0 && min_damper_range <= 1.0)) {
    throw Error("thresholds: min_damper_range must lie in [0, 1]");
  }
  if (!(valve_closed_max >= 0.0 && valve_closed_max < 1.0)) {
    throw Error("thresholds: valve_closed_max must lie in [0, 1)");
  }
}

int rule_number(RuleId rule) { return static_cast<int>(rule); }

RuleId rule_from_number(int n) {
  if (n < 1 || n > 5) throw Error("unknown rule id " + std::to_string(n));
  return static_cast<RuleId>(n);
}

std::string_view rule_label(RuleId rule) {
  switch (rule) {
    case RuleId::EconomizerBroken: return "Economizer damper broken";
    case RuleId::CoolingValveLeak: return "AHU cooling valve leaking";
    case RuleId::HeatingValveLeak: return "AHU heating valve leaking";
    case RuleId::ConfigurationError: return "Configuration error";
    case RuleId::DamperStuck: return "VAV damper leaking or stuck";
  }
  return "?";
}

bool rule_targets_vav(RuleId rule) {
  return rule == RuleId::ConfigurationError || rule == RuleId::DamperStuck;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Healthy: return "healthy";
    case Verdict::Fault: return "fault";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

using Column = std::vector<Sample>;

const Column& need(const BuildingEstimate& est, const std::string& name, std::string_view what) {
  const Column* c = est.frame.find(name);
  if (!c) throw Error("rule skipped: " + std::string(what) + " unavailable (" + name + ")");
  return *c;
}

struct Rows {
  std::vector<std::size_t> complete;
  std::size_t total = 0;
  double coverage() const {
    return total == 0 ? 0.0 : static_cast<double>(complete.size()) / static_cast<double>(total);
  }
};

Rows window_rows(const AlignedFrame& f, const std::vector<const Column*>& cols, Window w) {
  Rows r;
  const auto [first, last] = f.row_range(w);
  r.total = last - first;
  for (std::size_t i = first; i < last; ++i) {
    bool ok = true;
    for (const auto* c : cols) ok = ok && (*c)[i].has_value();
    if (ok) r.complete.push_back(i);
  }
  return r;
}

std::vector<double> take(const Column& c, const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(*c[i]);
  return out;
}

RuleResult start(RuleId rule, const std::string& eq, double threshold) {
  RuleResult r;
  r.rule = rule;
  r.equipment = eq;
  r.threshold = threshold;
  return r;
}

bool low_coverage(RuleResult& r, const Rows& rows, const Thresholds& th) {
  if (rows.total == 0 || rows.coverage() < th.min_coverage) {
    r.verdict = Verdict::Inconclusive;
    r.reason = "insufficient data coverage";
    return true;
  }
  return false;
}

RuleResult valve_rule(RuleId rule, const BuildingEstimate& est, const std::string& ahu,
                      Window window, const Thresholds& th) {
  const bool cooling = rule == RuleId::CoolingValveLeak;
  const PointRole own = cooling ? PointRole::AhuCoolingValveCmd : PointRole::AhuHeatingValveCmd;
  const PointRole other = cooling ? PointRole::AhuHeatingValveCmd : PointRole::AhuCoolingValveCmd;
  RuleResult r = start(rule, ahu, cooling ? th.cooling_mpe_max : th.heating_mpe_min);

  const std::string sat_name = col::input(ahu, PointRole::AhuSupplyAirTemp);
  const std::string mat_name = col::derived(ahu, col::kMixedAir);
  const std::string valve_name = col::input(ahu, own);
  const Column& sat = need(est, sat_name, "supply-air temperature");
  const Column& mat = need(est, mat_name, "mixed-air temperature");
  const Column& valve = need(est, valve_name, cooling ? "cooling valve command" : "heating valve command");
  const Column* other_valve = est.frame.find(col::input(ahu, other));
  r.evidence = {sat_name, mat_name, valve_name};
  std::vector<const Column*> cols{&sat, &mat, &valve};
  if (other_valve) {
    cols.push_back(other_valve);
    r.evidence.push_back(col::input(ahu, other));
  }

  const Rows rows = window_rows(est.frame, cols, window);
  if (low_coverage(r, rows, th)) return r;
  std::vector<std::size_t> closed;
  for (auto i : rows.complete) {
    if (*valve[i] > th.valve_closed_max) continue;
    if (other_valve && *(*other_valve)[i] > th.valve_closed_max) continue;
    closed.push_back(i);
  }
  if (closed.empty()) {
    r.reason = cooling ? "cooling valve never closed" : "heating valve never closed";
    return r;
  }
  r.samples = closed.size();
  try {
    r.statistic = mpe(take(sat, closed), take(mat, closed), percent_error_options(Unit::Fahrenheit));
  } catch (const Error& e) {
    r.reason = e.what();
    return r;
  }
  const bool fault = cooling ? *r.statistic < r.threshold : *r.statistic > r.threshold;
  r.verdict = fault ? Verdict::Fault : Verdict::Healthy;
  return r;
}

std::vector<Sample> constant_or_point(const BuildingEstimate& est, const std::string& vav,
                                      PointRole role, std::optional<double> configured,
                                      const char* what) {
  if (const Column* c = est.frame.find(col::input(vav, role))) return *c;
  if (configured) return Column(est.frame.rows(), *configured);
  throw Error("VAV missing " + std::string(what) + " config: '" + vav + "'");
}

const VavNode& vav_node(const EquipmentGraph& graph, const std::string& vav) {
  const VavNode* v = graph.find_vav(vav);
  if (!v) throw Error("unknown VAV '" + vav + "'");
  return *v;
}

}  // namespace

RuleResult rule_economizer(const BuildingEstimate& est, const std::string& ahu, Window window,
                           const Thresholds& th) {
  RuleResult r = start(RuleId::EconomizerBroken, ahu, th.correlation_min);
  const std::string measured_name = col::input(ahu, PointRole::AhuMixedAirTemp);
  const std::string estimated_name = col::derived(ahu, col::kMixedAirEstimated);
  const std::string damper_name = col::input(ahu, PointRole::EconomizerDamperPos);
  const Column& measured = need(est, measured_name, "measured mixed-air temperature");
  const Column& damper = need(est, damper_name, "economizer damper position");
  const Column& estimated = need(est, estimated_name, "mixed-air estimate");
  r.evidence = {measured_name, estimated_name, damper_name};

  const Rows rows = window_rows(est.frame, {&measured, &estimated, &damper}, window);
  if (low_coverage(r, rows, th)) return r;
  r.samples = rows.complete.size();
  const auto d = take(damper, rows.complete);
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  if (*hi - *lo < th.min_damper_range) {
    r.reason = "insufficient damper movement";
    return r;
  }
  try {
    r.statistic = pearson(take(measured, rows.complete), take(estimated, rows.complete));
  } catch (const Error& e) {
    r.reason = "flatlined sensor";
    return r;
  }
  r.verdict = *r.statistic < th.correlation_min ? Verdict::Fault : Verdict::Healthy;
  return r;
}

RuleResult rule_cooling_valve_leak(const BuildingEstimate& est, const std::string& ahu,
                                   Window window, const Thresholds& th) {
  return valve_rule(RuleId::CoolingValveLeak, est, ahu, window, th);
}

RuleResult rule_heating_valve_leak(const BuildingEstimate& est, const std::string& ahu,
                                   Window window, const Thresholds& th) {
  return valve_rule(RuleId::HeatingValveLeak, est, ahu, window, th);
}

std::vector<Sample> occupancy(const BuildingEstimate& est, const EquipmentGraph& graph,
                              const std::string& vav) {
  if (const Column* c = est.frame.find(col::input(vav, PointRole::OccupiedCmd))) return *c;
  Column out(est.frame.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = graph.schedule.occupied(est.frame.time_at(i)) ? 1.0 : 0.0;
  }
  return out;
}

std::vector<Sample> min_flow(const BuildingEstimate& est, const EquipmentGraph& graph,
                             const std::string& vav) {
  return constant_or_point(est, vav, PointRole::VavMinFlow, vav_node(graph, vav).min_flow_cfm,
                           "min-flow");
}

std::vector<Sample> upper_limit(const BuildingEstimate& est, const EquipmentGraph& graph,
                                const std::string& vav) {
  return constant_or_point(est, vav, PointRole::ZoneUpperLimit, vav_node(graph, vav).upper_limit_f,
                           "zone upper-limit");
}

RuleResult rule_config_error(const BuildingEstimate& est, const EquipmentGraph& graph,
                             const std::string& vav, Window window, const Thresholds& th) {
  RuleResult r = start(RuleId::ConfigurationError, vav, th.config_violation_fraction);
  const Column qmin = min_flow(est, graph, vav);
  const Column upper = upper_limit(est, graph, vav);
  const Column occ = occupancy(est, graph, vav);
  const std::string flow_name = col::input(vav, PointRole::VavSupplyFlow);
  const std::string zone_name = col::input(vav, PointRole::ZoneTemp);
  const Column& q = need(est, flow_name, "supply flow");
  const Column& tz = need(est, zone_name, "zone temperature");
  r.evidence = {flow_name, zone_name};

  const Rows rows = window_rows(est.frame, {&q, &tz, &qmin, &upper, &occ}, window);
  if (low_coverage(r, rows, th)) return r;
  std::size_t candidates = 0, violating = 0;
  for (auto i : rows.complete) {
    if (*occ[i] != 0.0 || !(*tz[i] < *upper[i])) continue;
    ++candidates;
    if (*q[i] > th.occupied_flow_slack * *qmin[i]) ++violating;
  }
  r.samples = candidates;
  // With no unoccupied instant below the upper limit the zone legitimately needs air.
  r.statistic = candidates == 0 ? 0.0
                                : static_cast<double>(violating) / static_cast<double>(candidates);
  r.verdict = *r.statistic > th.config_violation_fraction ? Verdict::Fault : Verdict::Healthy;
  return r;
}

RuleResult rule_damper_stuck(const BuildingEstimate& est, const std::string& vav, Window window,
                             const Thresholds& th) {
  RuleResult r = start(RuleId::DamperStuck, vav, th.damper_rmspe_max);
  const std::string flow_name = col::input(vav, PointRole::VavSupplyFlow);
  const std::string sp_name = col::input(vav, PointRole::VavSupplyFlowSetpoint);
  const Column& q = need(est, flow_name, "supply flow");
  const Column& qs = need(est, sp_name, "flow setpoint");
  r.evidence = {flow_name, sp_name};

  const Rows rows = window_rows(est.frame, {&q, &qs}, window);
  if (low_coverage(r, rows, th)) return r;
  r.samples = rows.complete.size();
  try {
    r.statistic = rmspe(take(q, rows.complete), take(qs, rows.complete),
                        percent_error_options(Unit::Cfm));
  } catch (const Error& e) {
    r.reason = "degenerate flow setpoint";
    return r;
  }
  r.verdict = *r.statistic > th.damper_rmspe_max ? Verdict::Fault : Verdict::Healthy;
  return r;
}

RuleResult evaluate_rule(RuleId rule, const BuildingEstimate& est, const EquipmentGraph& graph,
                         const std::string& equipment, Window window, const Thresholds& th) {
  switch (rule) {
    case RuleId::EconomizerBroken: return rule_economizer(est, equipment, window, th);
    case RuleId::CoolingValveLeak: return rule_cooling_valve_leak(est, equipment, window, th);
    case RuleId::HeatingValveLeak: return rule_heating_valve_leak(est, equipment, window, th);
    case RuleId::ConfigurationError: return rule_config_error(est, graph, equipment, window, th);
    case RuleId::DamperStuck: return rule_damper_stuck(est, equipment, window, th);
  }
  throw Error("unknown rule");
}

Detection run_all(const BuildingEstimate& est, const EquipmentGraph& graph, Window window,
                  const Thresholds& th) {
  th.validate();
  Detection out;
  const Window span{std::max(window.begin, est.frame.start()), std::min(window.end, est.frame.end())};
  if (span.empty() || span.length() < th.min_persistence) {
    out.warnings.push_back("analysis window shorter than min_persistence; no rules evaluated");
    return out;
  }

  std::vector<Window> windows;
  for (Timestamp s = span.begin; s + th.min_persistence <= span.end; s += kDay) {
    windows.push_back({s, s + th.min_persistence});
  }
  if (windows.back().end != span.end) windows.push_back({span.end - th.min_persistence, span.end});

  for (RuleId rule : kAllRules) {
    std::vector<std::string> targets;
    if (rule_targets_vav(rule)) {
      for (const auto& [ahu, vavs] : est.included_vavs) targets.insert(targets.end(), vavs.begin(), vavs.end());
    } else {
      targets = est.ahus;
    }
    std::sort(targets.begin(), targets.end());

    for (const auto& eq : targets) {
      std::map<std::string, std::size_t> reasons;
      std::vector<RuleResult> hits;
      std::vector<Window> hit_windows;
      for (const auto& w : windows) {
        RuleResult r;
        try {
          r = evaluate_rule(rule, est, graph, eq, w, th);
        } catch (const Error& e) {
          r.verdict = Verdict::Inconclusive;
          r.reason = e.what();
        }
        if (r.verdict == Verdict::Fault) {
          hits.push_back(std::move(r));
          hit_windows.push_back(w);
        } else if (r.verdict == Verdict::Inconclusive) {
          ++reasons[r.reason];
        }
      }
      for (const auto& [reason, count] : reasons) out.inconclusive.push_back({rule, eq, reason, count});
      if (hits.empty()) continue;

      // Merge overlapping violating windows and keep the longest span.
      std::size_t best_begin = 0, best_end = 0;
      for (std::size_t a = 0; a < hits.size();) {
        std::size_t b = a + 1;
        Timestamp end = hit_windows[a].end;
        while (b < hits.size() && hit_windows[b].begin <= end) {
          end = std::max(end, hit_windows[b].end);
          ++b;
        }
        const auto len = end - hit_windows[a].begin;
        if (best_end == 0 ||
            len > hit_windows[best_end - 1].end - hit_windows[best_begin].begin) {
          best_begin = a;
          best_end = b;
        }
        a = b;
      }
      FaultFinding f;
      f.rule = rule;
      f.equipment = eq;
      f.window = {hit_windows[best_begin].begin, hit_windows[best_begin].begin};
      const bool lower_is_worse = rule == RuleId::EconomizerBroken || rule == RuleId::CoolingValveLeak;
      f.statistic = *hits[best_begin].statistic;
      for (std::size_t i = best_begin; i < best_end; ++i) {
        f.window.end = std::max(f.window.end, hit_windows[i].end);
        const double s = *hits[i].statistic;
        f.statistic = lower_is_worse ? std::min(f.statistic, s) : std::max(f.statistic, s);
      }
      f.threshold = hits[best_begin].threshold;
      f.persistence = f.window.length();
      f.evidence = hits[best_begin].evidence;
      out.findings.push_back(std::move(f));
    }
  }
  std::sort(out.findings.begin(), out.findings.end(), [](const FaultFinding& a, const FaultFinding& b) {
    return std::tie(a.rule, a.equipment) < std::tie(b.rule, b.equipment);
  });
  return out;
}

}  // namespace apportion
