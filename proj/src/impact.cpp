#include "apportion/impact.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <tuple>

#include "apportion/error.hpp"
#include "apportion/statistics.hpp"

namespace apportion {

std::string_view to_string(ImpactMethod m) {
  switch (m) {
    case ImpactMethod::SetpointIdeal: return "setpoint-ideal";
    case ImpactMethod::ModelIdeal: return "model-ideal";
    case ImpactMethod::NotEstimable: return "not-estimable";
  }
  return "?";
}

namespace {

using Column = std::vector<Sample>;
using RowLoss = std::function<std::optional<double>(std::size_t)>;

LossEstimate not_estimable(std::string note) {
  LossEstimate e;
  e.note = std::move(note);
  return e;
}

const Column* find_col(const BuildingEstimate& est, const std::string& name) {
  return est.frame.find(name);
}

/// Per-row loss power (MMBTU/hr) for the rule, or a reason it cannot be built.
struct RowModel {
  RowLoss fn;
  ImpactMethod method = ImpactMethod::NotEstimable;
  std::string note;
};

RowModel vav_flow_model(const FaultFinding& f, const CalibratedModel& model,
                        const BuildingEstimate& est, const EquipmentGraph& graph,
                        std::shared_ptr<std::vector<Column>> hold) {
  RowModel rm;
  const auto c1 = model.c(1);
  if (!c1) return {nullptr, ImpactMethod::NotEstimable, "VAV cooling coefficients not fitted"};
  const std::string& v = f.equipment;
  const Column* q = find_col(est, col::input(v, PointRole::VavSupplyFlow));
  const Column* tz = find_col(est, col::input(v, PointRole::ZoneTemp));
  const Column* tsa = find_col(est, col::derived(v, col::kSupplyAir));
  if (!q || !tz || !tsa) return {nullptr, ImpactMethod::NotEstimable, "VAV inputs unavailable"};

  const Column* ideal = nullptr;
  if (f.rule == RuleId::DamperStuck) {
    ideal = find_col(est, col::input(v, PointRole::VavSupplyFlowSetpoint));
    if (!ideal) return {nullptr, ImpactMethod::NotEstimable, "flow setpoint unavailable"};
  } else {
    Column qmin, upper;
    try {
      qmin = min_flow(est, graph, v);
      upper = upper_limit(est, graph, v);
    } catch (const Error& e) {
      return {nullptr, ImpactMethod::NotEstimable, e.what()};
    }
    const Column occ = occupancy(est, graph, v);
    Column out(est.frame.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(*q)[i] || !(*tz)[i] || !qmin[i] || !upper[i] || !occ[i]) continue;
      const bool applies = *occ[i] == 0.0 && *(*tz)[i] < *upper[i];
      out[i] = applies ? *qmin[i] : *(*q)[i];
    }
    hold->push_back(std::move(out));
    ideal = &hold->back();
  }

  const auto c7 = model.c(7);
  const Column* hv = find_col(est, col::input(v, PointRole::VavHeatingValveCmd));
  const Column* hw = find_col(est, col::input(graph.building_id, PointRole::HotWaterSupplyTemp));
  const bool reheat = c7 && hv && hw;
  const auto k = est.constants;
  rm.method = ImpactMethod::SetpointIdeal;
  rm.fn = [=, hold = std::move(hold)](std::size_t i) -> std::optional<double> {
    if (!(*q)[i] || !(*tz)[i] || !(*tsa)[i] || !(*ideal)[i]) return std::nullopt;
    double d = *c1 * (vav_cooling_power(*(*q)[i], *(*tz)[i], *(*tsa)[i], k) -
                      vav_cooling_power(*(*ideal)[i], *(*tz)[i], *(*tsa)[i], k));
    if (reheat) {
      if (!(*hv)[i] || !(*hw)[i]) return std::nullopt;
      d += *c7 * (vav_heating_power(*(*hw)[i], *(*tsa)[i], *(*q)[i], *(*hv)[i], k) -
                  vav_heating_power(*(*hw)[i], *(*tsa)[i], *(*ideal)[i], *(*hv)[i], k));
    }
    return d;
  };
  return rm;
}

RowModel ahu_model(const FaultFinding& f, const CalibratedModel& model, const BuildingEstimate& est,
                   double valve_closed_max) {
  const std::string& a = f.equipment;
  const Column* tma = find_col(est, col::derived(a, col::kMixedAir));
  const Column* tsa = find_col(est, col::input(a, PointRole::AhuSupplyAirTemp));
  const Column* qsum = find_col(est, col::derived(a, col::kFlowSum));
  if (!tma || !tsa || !qsum) return {nullptr, ImpactMethod::NotEstimable, "AHU inputs unavailable"};
  const auto k = est.constants;

  if (f.rule == RuleId::EconomizerBroken) {
    const auto c4 = model.c(4);
    const auto c6 = model.c(6);
    if (!c4 || !c6) return {nullptr, ImpactMethod::NotEstimable, "AHU coefficients not fitted"};
    const Column* measured = find_col(est, col::input(a, PointRole::AhuMixedAirTemp));
    const Column* estimated = find_col(est, col::derived(a, col::kMixedAirEstimated));
    if (!measured || !estimated) {
      return {nullptr, ImpactMethod::NotEstimable, "mixed-air estimate unavailable"};
    }
    return {[=](std::size_t i) -> std::optional<double> {
              if (!(*measured)[i] || !(*estimated)[i] || !(*tsa)[i] || !(*qsum)[i]) return std::nullopt;
              const auto faulty = ahu_power(*(*measured)[i], *(*tsa)[i], *(*qsum)[i], k);
              const auto ideal = ahu_power(*(*estimated)[i], *(*tsa)[i], *(*qsum)[i], k);
              return *c4 * (faulty.cooling - ideal.cooling) + *c6 * (faulty.heating - ideal.heating);
            },
            ImpactMethod::ModelIdeal, ""};
  }

  const bool cooling = f.rule == RuleId::CoolingValveLeak;
  const auto c = model.c(cooling ? 4 : 6);
  if (!c) return {nullptr, ImpactMethod::NotEstimable, "AHU coefficients not fitted"};
  const Column* own = find_col(est, col::input(a, cooling ? PointRole::AhuCoolingValveCmd
                                                          : PointRole::AhuHeatingValveCmd));
  const Column* other = find_col(est, col::input(a, cooling ? PointRole::AhuHeatingValveCmd
                                                            : PointRole::AhuCoolingValveCmd));
  if (!own) return {nullptr, ImpactMethod::NotEstimable, "valve command unavailable"};
  return {[=](std::size_t i) -> std::optional<double> {
            if (!(*tma)[i] || !(*tsa)[i] || !(*qsum)[i] || !(*own)[i]) return std::nullopt;
            if (other && !(*other)[i]) return std::nullopt;
            const bool closed = *(*own)[i] <= valve_closed_max &&
                                (!other || *(*other)[i] <= valve_closed_max);
            if (!closed) return 0.0;
            // Ideal state T_SA = T_MA draws no coil power.
            const auto p = ahu_power(*(*tma)[i], *(*tsa)[i], *(*qsum)[i], k);
            return *c * (cooling ? p.cooling : p.heating);
          },
          ImpactMethod::ModelIdeal, ""};
}

}  // namespace

LossEstimate fault_energy_loss(const FaultFinding& finding, const CalibratedModel& model,
                               const BuildingEstimate& est, const EquipmentGraph& graph,
                               double min_coverage) {
  if (finding.window.length() < kMinImpactSpan) {
    throw Error("fault_energy_loss: window shorter than one week");
  }
  auto hold = std::make_shared<std::vector<Column>>();
  hold->reserve(1);  // the ideal-flow column must not move
  RowModel rm = rule_targets_vav(finding.rule)
                    ? vav_flow_model(finding, model, est, graph, hold)
                    : ahu_model(finding, model, est, Thresholds{}.valve_closed_max);
  if (!rm.fn) return not_estimable(rm.note);

  const AlignedFrame& f = est.frame;
  const auto [first, last] = f.row_range(finding.window);
  const double dt_hours = std::chrono::duration<double>(f.interval()).count() / 3600.0;
  const Column* oat = f.find(col::input(graph.building_id, PointRole::OutsideAirTemp));

  LossEstimate out;
  out.method = rm.method;
  std::size_t valid = 0;
  double total = 0.0;
  for (Timestamp day = finding.window.begin; day < finding.window.end; day += kDay) {
    const Window w{day, std::min(day + kDay, finding.window.end)};
    const auto [a, b] = f.row_range(w);
    DailyLoss d{day, 0.0, std::nullopt};
    std::size_t day_valid = 0, oat_n = 0;
    double oat_sum = 0.0;
    for (std::size_t i = a; i < b; ++i) {
      const auto p = rm.fn(i);
      if (oat && (*oat)[i]) {
        oat_sum += *(*oat)[i];
        ++oat_n;
      }
      if (!p) continue;
      d.loss += *p * dt_hours;
      ++day_valid;
    }
    if (oat_n > 0) d.mean_oat = oat_sum / static_cast<double>(oat_n);
    if (day_valid > 0) out.daily.push_back(d);
    valid += day_valid;
    total += d.loss;
  }
  const std::size_t rows = last - first;
  if (rows == 0 || static_cast<double>(valid) / static_cast<double>(rows) < min_coverage) {
    return not_estimable("insufficient data coverage");
  }
  out.loss = std::max(0.0, total);
  return out;
}

Annualized annualize(std::span<const double> daily_losses, std::span<const double> daily_oat,
                     std::span<const double> reference_year_oat) {
  if (daily_losses.size() != daily_oat.size()) throw Error("annualize: length mismatch");
  if (daily_losses.size() < kMinAnnualDays) {
    throw Error("annualize: need at least " + std::to_string(kMinAnnualDays) + " days, got " +
                std::to_string(daily_losses.size()));
  }
  if (reference_year_oat.empty()) throw Error("annualize: empty reference year");
  Annualized a;
  try {
    a.r = pearson(daily_oat, daily_losses);
  } catch (const Error&) {
    a.r = 0.0;  // flat loss or flat weather carries no weather signal
  }
  const double m = mean(daily_losses);
  if (std::abs(a.r) < kMinAnnualCorrelation) {
    a.flat = true;
    a.slope = 0.0;
    a.intercept = m;
    a.annual = std::max(0.0, m) * 365.0;
    return a;
  }
  const std::vector<std::vector<double>> x{{daily_oat.begin(), daily_oat.end()}};
  const std::vector<std::string> names{"daily_oat"};
  const LinearFit fit = fit_linear(x, names, daily_losses);
  a.slope = fit.slopes[0];
  a.intercept = fit.intercept;
  for (double t : reference_year_oat) a.annual += std::max(0.0, a.slope * t + a.intercept);
  return a;
}

std::vector<double> parse_reference_year(std::string_view csv_text) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  std::vector<std::optional<double>> days(365);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "day_of_year,oat_f") throw IoError("reference weather: expected header 'day_of_year,oat_f'");
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      std::size_t used = 0;
      const int day = std::stoi(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("bad day");
      const std::string v = line.substr(comma + 1);
      const double t = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument("bad value");
      if (day < 1 || day > 365) throw IoError("reference weather line " + std::to_string(line_no) + ": day out of range");
      if (days[day - 1]) throw IoError("reference weather line " + std::to_string(line_no) + ": duplicate day");
      days[day - 1] = t;
    } catch (const std::logic_error&) {
      throw IoError("reference weather line " + std::to_string(line_no) + ": malformed row");
    }
  }
  std::vector<double> out;
  for (std::size_t d = 0; d < days.size(); ++d) {
    if (!days[d]) throw IoError("reference weather: day " + std::to_string(d + 1) + " missing");
    out.push_back(*days[d]);
  }
  return out;
}

std::vector<double> read_reference_year(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_reference_year(ss.str());
}

ImpactEstimate assess(const FaultFinding& finding, const CalibratedModel& model,
                      const BuildingEstimate& est, const EquipmentGraph& graph,
                      std::span<const double> reference_year_oat, double min_coverage) {
  ImpactEstimate ie{finding, {}, std::nullopt, ""};
  try {
    ie.loss = fault_energy_loss(finding, model, est, graph, min_coverage);
  } catch (const Error& e) {
    ie.loss = not_estimable(e.what());
  }
  if (!ie.loss.loss) {
    ie.note = ie.loss.note;
    return ie;
  }
  if (*ie.loss.loss == 0.0) {
    // Nothing was lost over the window; don't extrapolate a regression fitted
    // to negative daily values into positive annual savings.
    ie.annual = Annualized{0.0, 0.0, 0.0, 0.0, true};
    ie.note = "no observed loss";
    return ie;
  }
  std::vector<double> losses, oats;
  for (const auto& d : ie.loss.daily) {
    if (!d.mean_oat) continue;
    losses.push_back(d.loss);
    oats.push_back(*d.mean_oat);
  }
  try {
    ie.annual = annualize(losses, oats, reference_year_oat);
    if (ie.annual->flat) ie.note = "flat extrapolation (|r| < 0.3)";
  } catch (const Error& e) {
    ie.note = e.what();
    ie.loss.method = ImpactMethod::NotEstimable;
  }
  return ie;
}

std::vector<ImpactEstimate> prioritize(std::vector<ImpactEstimate> impacts) {
  std::stable_sort(impacts.begin(), impacts.end(), [](const ImpactEstimate& a, const ImpactEstimate& b) {
    if (a.estimable() != b.estimable()) return a.estimable();
    if (a.estimable() && a.annual->annual != b.annual->annual) return a.annual->annual > b.annual->annual;
    return std::tie(a.finding.rule, a.finding.equipment) < std::tie(b.finding.rule, b.finding.equipment);
  });
  return impacts;
}

}  // namespace apportion
