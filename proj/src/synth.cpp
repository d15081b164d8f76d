#include "apportion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "apportion/error.hpp"
#include "apportion/ingest.hpp"

namespace apportion::synth {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ULL;

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

// Independent restatements of the model kernels, MMBTU/hr.
double vav_clg(double k, double q, double tz, double tsa) {
  return std::max(0.0, k * q * (tz - tsa) / 1e6);
}
double vav_htg(double k, double thw, double tsa, double q, double h) {
  return std::max(0.0, k * (thw - tsa) * q * h / 1e6);
}
struct CoilPower {
  double cooling = 0.0;
  double heating = 0.0;
  int mode = 0;
};
CoilPower ahu_coil(double k, double db, double tmix, double tsa, double qsum) {
  const double dt = tmix - tsa;
  const double p = k * qsum * dt / 1e6;
  if (dt >= db && dt > 0.0) return {std::max(0.0, p), 0.0, 1};
  if (dt <= -db && dt < 0.0) return {0.0, std::max(0.0, -p), -1};
  return {};
}

std::string two_digits(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", v);
  return buf;
}

std::string ahu_id(int a) { return "AHU" + std::to_string(a); }
std::string vav_id(int a, int v) { return "VAV" + std::to_string(a) + "-" + two_digits(v); }

std::string clock(int minutes) { return two_digits(minutes / 60) + ":" + two_digits(minutes % 60); }

std::size_t first_row(const ScenarioSpec& spec, double day) {
  return static_cast<std::size_t>(std::llround(day * 86400.0 / static_cast<double>(spec.interval.count())));
}

Window injection_window(const ScenarioSpec& spec, const FaultInjection& f) {
  const auto a = first_row(spec, f.start_day);
  const auto b = first_row(spec, f.start_day + f.duration_days);
  return {spec.start + static_cast<long>(a) * spec.interval, spec.start + static_cast<long>(b) * spec.interval};
}

std::pair<std::size_t, std::size_t> injection_rows(const ScenarioSpec& spec, const FaultInjection& f) {
  return {first_row(spec, f.start_day),
          std::min(spec.rows(), first_row(spec, f.start_day + f.duration_days))};
}

double sat_setpoint(const AhuControl& c, double oat) {
  if (oat >= c.reset_high_oat_f) return c.sat_cool_f;
  if (oat <= c.reset_low_oat_f) return c.sat_heat_f;
  const double f = (oat - c.reset_low_oat_f) / (c.reset_high_oat_f - c.reset_low_oat_f);
  return c.sat_heat_f + f * (c.sat_cool_f - c.sat_heat_f);
}

const FaultInjection* active(const std::vector<FaultInjection>& applied, const ScenarioSpec& spec,
                             const std::string& eq, std::size_t row) {
  for (const auto& f : applied) {
    if (f.equipment != eq) continue;
    const auto [a, b] = injection_rows(spec, f);
    if (row >= a && row < b) return &f;
  }
  return nullptr;
}

/// Mixing, damper control and coil response of one AHU from its VAVs' flows.
void simulate_ahu(Traces& tr, const ScenarioSpec& spec, std::size_t ai) {
  AhuTrace& ahu = tr.ahus[ai];
  const auto& c = spec.ahu;
  const std::size_t n = tr.time.size();
  for (auto* v : {&ahu.damper, &ahu.oa_fraction, &ahu.t_ret, &ahu.t_mix, &ahu.t_sa, &ahu.sat_sp,
                  &ahu.ccv, &ahu.hcv}) {
    v->assign(n, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double qsum = 0.0, qt = 0.0, tsum = 0.0;
    for (auto vi : ahu.vavs) {
      qsum += tr.vavs[vi].q[i];
      qt += tr.vavs[vi].q[i] * tr.vavs[vi].tz[i];
      tsum += tr.vavs[vi].tz[i];
    }
    const double tret = qsum > 0.0 ? qt / qsum : tsum / static_cast<double>(ahu.vavs.size());
    const double oat = tr.oat[i];
    const double sp = sat_setpoint(c, oat);
    double d = c.damper_min;
    if (oat < tret - 1.0) d = clamp((tret - sp) / (tret - oat), c.damper_min, 1.0);

    const FaultInjection* f = active(tr.applied, spec, ahu.id, i);
    const double oa = f && f->type == FaultType::EconomizerBroken ? f->magnitude : d;
    const double tmix = oa * oat + (1.0 - oa) * tret;
    const double diff = tmix - sp;
    double tsa = sp, ccv = 0.0, hcv = 0.0;
    if (std::abs(diff) < c.idle_band_f) {
      tsa = tmix;
    } else if (diff > 0.0) {
      ccv = clamp(diff / 20.0, 0.05, 1.0);
    } else {
      hcv = clamp(-diff / 20.0, 0.05, 1.0);
    }
    if (f && ccv == 0.0 && hcv == 0.0) {
      if (f->type == FaultType::CoolingValveLeak) tsa = tmix - f->magnitude;
      if (f->type == FaultType::HeatingValveLeak) tsa = tmix + f->magnitude;
    }
    ahu.damper[i] = d;
    ahu.oa_fraction[i] = oa;
    ahu.t_ret[i] = tret;
    ahu.t_mix[i] = tmix;
    ahu.t_sa[i] = tsa;
    ahu.sat_sp[i] = sp;
    ahu.ccv[i] = ccv;
    ahu.hcv[i] = hcv;
  }
}

double ahu_flow(const Traces& tr, const AhuTrace& a, std::size_t i) {
  double q = 0.0;
  for (auto vi : a.vavs) q += tr.vavs[vi].q[i];
  return q;
}

std::optional<std::size_t> find_ahu(const Traces& tr, const std::string& id) {
  for (std::size_t i = 0; i < tr.ahus.size(); ++i) {
    if (tr.ahus[i].id == id) return i;
  }
  return std::nullopt;
}
std::optional<std::size_t> find_vav(const Traces& tr, const std::string& id) {
  for (std::size_t i = 0; i < tr.vavs.size(); ++i) {
    if (tr.vavs[i].id == id) return i;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(FaultType t) {
  switch (t) {
    case FaultType::EconomizerBroken: return "economizer_broken";
    case FaultType::CoolingValveLeak: return "cooling_valve_leak";
    case FaultType::HeatingValveLeak: return "heating_valve_leak";
    case FaultType::ConfigurationError: return "configuration_error";
    case FaultType::DamperStuck: return "damper_stuck";
    case FaultType::DamperLeak: return "damper_leak";
  }
  return "?";
}

FaultType parse_fault_type(std::string_view s) {
  for (auto t : {FaultType::EconomizerBroken, FaultType::CoolingValveLeak, FaultType::HeatingValveLeak,
                 FaultType::ConfigurationError, FaultType::DamperStuck, FaultType::DamperLeak}) {
    if (to_string(t) == s) return t;
  }
  throw Error("unknown fault type '" + std::string(s) + "'");
}

int detecting_rule(FaultType t) {
  switch (t) {
    case FaultType::EconomizerBroken: return 1;
    case FaultType::CoolingValveLeak: return 2;
    case FaultType::HeatingValveLeak: return 3;
    case FaultType::ConfigurationError: return 4;
    case FaultType::DamperStuck:
    case FaultType::DamperLeak: return 5;
  }
  return 0;
}

bool targets_vav(FaultType t) {
  return t == FaultType::ConfigurationError || t == FaultType::DamperStuck || t == FaultType::DamperLeak;
}

double Normal::uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

double Normal::operator()() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(kTwoPi * u2);
}

std::size_t ScenarioSpec::rows() const {
  return static_cast<std::size_t>(
      std::llround(duration_days * 86400.0 / static_cast<double>(interval.count())));
}

void ScenarioSpec::validate() const {
  if (n_ahus < 1 || n_vavs_per_ahu < 1) throw Error("scenario: need at least one AHU and one VAV per AHU");
  if (n_vavs_per_ahu > 99) throw Error("scenario: at most 99 VAVs per AHU");
  if (!(duration_days > 0.0)) throw Error("scenario: duration must be positive");
  if (interval.count() <= 0 || 86400 % interval.count() != 0) {
    throw Error("scenario: interval must divide one day");
  }
  if (start.time_since_epoch().count() % interval.count() != 0) {
    throw Error("scenario: start must lie on the interval grid");
  }
  if (rows() < 2) throw Error("scenario: fewer than two rows");
  if (!(c[0] > 0.0 && c[3] > 0.0 && c[5] > 0.0 && c[6] > 0.0) || c[1] == 0.0) {
    throw Error("scenario: c1, c4, c6, c7 must be positive and c2 nonzero");
  }
  if (noise.temperature < 0.0 || noise.flow < 0.0 || noise.meter < 0.0) {
    throw Error("scenario: noise levels must be non-negative");
  }
  if (!(air_power_k > 0.0) || deadband_f < 0.0) throw Error("scenario: bad physical constants");
  if (zones.min_flow_lo <= 0.0 || zones.min_flow_hi < zones.min_flow_lo ||
      zones.max_flow_lo <= zones.min_flow_hi || zones.max_flow_hi < zones.max_flow_lo) {
    throw Error("scenario: inconsistent flow ranges");
  }
  std::set<std::string> used;
  for (const auto& f : faults) {
    const bool vav = targets_vav(f.type);
    bool known = false;
    for (int a = 1; a <= n_ahus && !known; ++a) {
      if (!vav) known = f.equipment == ahu_id(a);
      for (int v = 1; v <= n_vavs_per_ahu && vav && !known; ++v) known = f.equipment == vav_id(a, v);
    }
    if (!known) {
      throw Error("scenario: fault '" + std::string(to_string(f.type)) + "' targets unknown " +
                  (vav ? "VAV" : "AHU") + " '" + f.equipment + "'");
    }
    if (!(f.duration_days > 0.0) || f.start_day < 0.0 || f.start_day + f.duration_days > duration_days + 1e-9) {
      throw Error("scenario: injection window on '" + f.equipment + "' outside the scenario");
    }
    if (!used.insert(f.equipment).second) {
      throw Error("scenario: more than one injection on '" + f.equipment + "'");
    }
    if (f.type == FaultType::EconomizerBroken && !(f.magnitude >= 0.0 && f.magnitude <= 1.0)) {
      throw Error("scenario: economizer fault magnitude is an outside-air fraction in [0, 1]");
    }
    if (f.magnitude < 0.0) throw Error("scenario: negative fault magnitude on '" + f.equipment + "'");
  }
}

ScenarioSpec parse_scenario(std::string_view ini_text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(ini_text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw IoError(std::string("scenario: ") + e.what());
  }
  ScenarioSpec s;
  try {
    const auto get = [&](const char* path, auto& field) {
      using T = std::decay_t<decltype(field)>;
      if (auto node = tree.get_child_optional(path)) field = node->get_value<T>();
    };
    get("scenario.seed", s.seed);
    get("scenario.building", s.building);
    get("scenario.n_ahus", s.n_ahus);
    get("scenario.n_vavs_per_ahu", s.n_vavs_per_ahu);
    get("scenario.duration_days", s.duration_days);
    if (auto v = tree.get_optional<long>("scenario.interval_s")) s.interval = Seconds{*v};
    if (auto v = tree.get_optional<std::string>("scenario.start")) s.start = parse_timestamp(*v);
    get("scenario.utc_offset_minutes", s.utc_offset_minutes);
    get("scenario.air_power_k", s.air_power_k);
    get("scenario.deadband_f", s.deadband_f);
    for (int i = 0; i < 8; ++i) {
      const std::string key = "coefficients.c" + std::to_string(i + 1);
      get(key.c_str(), s.c[static_cast<std::size_t>(i)]);
    }
    get("noise.temperature", s.noise.temperature);
    get("noise.flow", s.noise.flow);
    get("noise.meter", s.noise.meter);
    get("weather.mean_f", s.weather.mean_f);
    get("weather.daily_amplitude_f", s.weather.daily_amplitude_f);
    get("weather.seasonal_amplitude_f", s.weather.seasonal_amplitude_f);
    get("weather.seasonal_period_days", s.weather.seasonal_period_days);
    get("weather.day_sigma_f", s.weather.day_sigma_f);
    get("weather.reference_amplitude_f", s.weather.reference_amplitude_f);
    if (auto v = tree.get_optional<std::string>("schedule.occupied_start")) {
      s.schedule.start_minute = parse_clock_minutes(*v);
    }
    if (auto v = tree.get_optional<std::string>("schedule.occupied_end")) {
      s.schedule.end_minute = parse_clock_minutes(*v);
    }
    get("schedule.weekdays_only", s.schedule.weekdays_only);
    get("zones.setpoint_min_f", s.zones.setpoint_min_f);
    get("zones.setpoint_max_f", s.zones.setpoint_max_f);
    get("zones.swing_f", s.zones.swing_f);
    if (auto node = tree.get_child_optional("zones.constant_temp_f")) s.zones.constant_temp_f = node->get_value<double>();
    get("zones.min_flow_lo", s.zones.min_flow_lo);
    get("zones.min_flow_hi", s.zones.min_flow_hi);
    get("zones.max_flow_lo", s.zones.max_flow_lo);
    get("zones.max_flow_hi", s.zones.max_flow_hi);
    get("zones.reheat_every", s.zones.reheat_every);
    get("zones.upper_limit_f", s.zones.upper_limit_f);
    get("ahu.damper_min", s.ahu.damper_min);
    get("ahu.idle_band_f", s.ahu.idle_band_f);
    get("ahu.sat_cool_f", s.ahu.sat_cool_f);
    get("ahu.sat_heat_f", s.ahu.sat_heat_f);
    get("ahu.reset_high_oat_f", s.ahu.reset_high_oat_f);
    get("ahu.reset_low_oat_f", s.ahu.reset_low_oat_f);
    get("ahu.hot_water_f", s.ahu.hot_water_f);
    for (const auto& [name, section] : tree) {
      if (name.rfind("fault", 0) != 0) continue;
      FaultInjection f;
      f.type = parse_fault_type(section.get<std::string>("type"));
      f.equipment = section.get<std::string>("equipment");
      f.start_day = section.get<double>("start_day", f.start_day);
      f.duration_days = section.get<double>("duration_days", f.duration_days);
      f.magnitude = section.get<double>("magnitude", f.magnitude);
      s.faults.push_back(std::move(f));
    }
  } catch (const pt::ptree_error& e) {
    throw Error(std::string("scenario: ") + e.what());
  }
  s.schedule.utc_offset_minutes = s.utc_offset_minutes;
  s.validate();
  return s;
}

ScenarioSpec read_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

Traces simulate(const ScenarioSpec& spec) {
  spec.validate();
  Normal rng(spec.seed);
  const std::size_t n = spec.rows();
  const double dt_h = static_cast<double>(spec.interval.count()) / 3600.0;
  Traces tr;
  tr.time.resize(n);
  tr.oat.resize(n);
  tr.hwst.resize(n);
  tr.occupied.resize(n);

  struct VavParams {
    double setpoint, period_h, phase, gain, load_phase;
  };
  std::vector<VavParams> params;
  for (int a = 1; a <= spec.n_ahus; ++a) {
    AhuTrace ahu;
    ahu.id = ahu_id(a);
    for (int v = 1; v <= spec.n_vavs_per_ahu; ++v) {
      VavTrace vt;
      vt.id = vav_id(a, v);
      vt.ahu = static_cast<std::size_t>(a - 1);
      VavParams p{};
      p.setpoint = rng.uniform(spec.zones.setpoint_min_f, spec.zones.setpoint_max_f);
      p.period_h = rng.uniform(9.0, 17.0);
      p.phase = rng.uniform(0.0, kTwoPi);
      p.gain = rng.uniform(0.6, 1.0);
      p.load_phase = rng.uniform(0.0, kTwoPi);
      vt.q_min = rng.uniform(spec.zones.min_flow_lo, spec.zones.min_flow_hi);
      vt.q_max = rng.uniform(spec.zones.max_flow_lo, spec.zones.max_flow_hi);
      const int index = static_cast<int>(tr.vavs.size()) + 1;
      vt.reheat = spec.zones.reheat_every > 0 && index % spec.zones.reheat_every == 0;
      ahu.vavs.push_back(tr.vavs.size());
      tr.vavs.push_back(std::move(vt));
      params.push_back(p);
    }
    tr.ahus.push_back(std::move(ahu));
  }
  const auto days = static_cast<std::size_t>(std::ceil(spec.duration_days)) + 1;
  std::vector<double> day_offset(days);
  for (auto& d : day_offset) d = spec.weather.day_sigma_f * rng();

  const auto& w = spec.weather;
  for (std::size_t i = 0; i < n; ++i) {
    const Timestamp t = spec.start + static_cast<long>(i) * spec.interval;
    tr.time[i] = t;
    const double hours = static_cast<double>(i) * dt_h;
    const auto local = (t + std::chrono::minutes{spec.utc_offset_minutes}).time_since_epoch().count();
    const double hour_of_day = static_cast<double>(((local % 86400) + 86400) % 86400) / 3600.0;
    tr.oat[i] = w.mean_f + w.daily_amplitude_f * std::sin(kTwoPi * (hour_of_day - 9.0) / 24.0) +
                w.seasonal_amplitude_f * std::sin(kTwoPi * hours / 24.0 / w.seasonal_period_days) +
                day_offset[static_cast<std::size_t>(hours / 24.0)];
    tr.hwst[i] = spec.ahu.hot_water_f + 4.0 * std::sin(kTwoPi * hour_of_day / 24.0);
    OccupancySchedule sched = spec.schedule;
    sched.utc_offset_minutes = spec.utc_offset_minutes;
    tr.occupied[i] = sched.occupied(t);
  }

  for (std::size_t vi = 0; vi < tr.vavs.size(); ++vi) {
    VavTrace& v = tr.vavs[vi];
    const VavParams& p = params[vi];
    v.tz.resize(n);
    v.q.resize(n);
    v.qs.resize(n);
    v.h.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double hours = static_cast<double>(i) * dt_h;
      v.tz[i] = spec.zones.constant_temp_f
                    ? *spec.zones.constant_temp_f
                    : p.setpoint + spec.zones.swing_f * std::sin(kTwoPi * hours / p.period_h + p.phase);
      double qs = v.q_min;
      if (tr.occupied[i]) {
        const double weather = clamp((tr.oat[i] - 50.0) / 30.0, 0.0, 1.0);
        const double load = clamp(p.gain * (0.25 + 0.75 * weather) +
                                      0.1 * std::sin(kTwoPi * hours / p.period_h + p.load_phase),
                                  0.0, 1.0);
        qs = v.q_min + load * (v.q_max - v.q_min);
      }
      v.qs[i] = qs;
      v.q[i] = qs;
      v.h[i] = v.reheat ? clamp((52.0 - tr.oat[i]) / 15.0 * p.gain, 0.0, 1.0) : 0.0;
    }
  }
  for (std::size_t a = 0; a < tr.ahus.size(); ++a) simulate_ahu(tr, spec, a);
  return tr;
}

WasteRecord waste_of(const Traces& tr, const ScenarioSpec& spec, const FaultInjection& f) {
  WasteRecord rec;
  rec.injection = f;
  rec.window = injection_window(spec, f);
  const auto [first, last] = injection_rows(spec, f);
  const double k = spec.air_power_k;
  const double dt_h = static_cast<double>(spec.interval.count()) / 3600.0;
  const auto& c = spec.c;
  double total = 0.0;

  if (targets_vav(f.type)) {
    const auto vi = *find_vav(tr, f.equipment);
    const VavTrace& v = tr.vavs[vi];
    const AhuTrace& a = tr.ahus[v.ahu];
    for (std::size_t i = first; i < last; ++i) {
      double ideal = v.qs[i];
      if (f.type == FaultType::ConfigurationError) {
        if (tr.occupied[i] || !(v.tz[i] < spec.zones.upper_limit_f)) continue;
        ideal = v.q_min;
      }
      ++rec.affected_rows;
      double p = c[0] * (vav_clg(k, v.q[i], v.tz[i], a.t_sa[i]) - vav_clg(k, ideal, v.tz[i], a.t_sa[i]));
      if (v.reheat) {
        p += c[6] * (vav_htg(k, tr.hwst[i], a.t_sa[i], v.q[i], v.h[i]) -
                     vav_htg(k, tr.hwst[i], a.t_sa[i], ideal, v.h[i]));
      }
      total += p * dt_h;
    }
  } else {
    const AhuTrace& a = tr.ahus[*find_ahu(tr, f.equipment)];
    for (std::size_t i = first; i < last; ++i) {
      const double qsum = ahu_flow(tr, a, i);
      if (f.type == FaultType::EconomizerBroken) {
        const double ideal_mix = a.damper[i] * tr.oat[i] + (1.0 - a.damper[i]) * a.t_ret[i];
        const auto faulty = ahu_coil(k, spec.deadband_f, a.t_mix[i], a.t_sa[i], qsum);
        const auto ideal = ahu_coil(k, spec.deadband_f, ideal_mix, a.t_sa[i], qsum);
        total += (c[3] * (faulty.cooling - ideal.cooling) + c[5] * (faulty.heating - ideal.heating)) * dt_h;
        ++rec.affected_rows;
      } else {
        if (a.ccv[i] != 0.0 || a.hcv[i] != 0.0) continue;
        ++rec.affected_rows;
        const auto p = ahu_coil(k, spec.deadband_f, a.t_mix[i], a.t_sa[i], qsum);
        total += (f.type == FaultType::CoolingValveLeak ? c[3] * p.cooling : c[5] * p.heating) * dt_h;
      }
    }
  }
  rec.waste_signed = total;
  rec.waste = std::max(0.0, total);
  return rec;
}

WasteRecord inject_fault(Traces& tr, const ScenarioSpec& spec, const FaultInjection& f) {
  for (const auto& g : tr.applied) {
    if (g.equipment == f.equipment) throw Error("second injection on '" + f.equipment + "'");
  }
  const auto [first, last] = injection_rows(spec, f);
  if (f.start_day < 0.0 || first >= last ||
      first_row(spec, f.start_day + f.duration_days) > tr.time.size()) {
    throw Error("injection window on '" + f.equipment + "' outside the traces");
  }
  std::size_t ahu = 0;
  if (targets_vav(f.type)) {
    const auto vi = find_vav(tr, f.equipment);
    if (!vi) throw Error("injection targets unknown VAV '" + f.equipment + "'");
    VavTrace& v = tr.vavs[*vi];
    for (std::size_t i = first; i < last; ++i) {
      switch (f.type) {
        case FaultType::ConfigurationError:
          if (!tr.occupied[i]) v.q[i] = v.qs[i] = f.magnitude * v.q_min;
          break;
        case FaultType::DamperStuck: v.q[i] = f.magnitude; break;
        case FaultType::DamperLeak: v.q[i] = v.qs[i] + f.magnitude; break;
        default: break;
      }
    }
    ahu = v.ahu;
  } else {
    const auto ai = find_ahu(tr, f.equipment);
    if (!ai) throw Error("injection targets unknown AHU '" + f.equipment + "'");
    ahu = *ai;
  }
  tr.applied.push_back(f);
  simulate_ahu(tr, spec, ahu);
  return waste_of(tr, spec, f);
}

namespace {

struct Point {
  std::string id;
  std::string equipment;
  PointRole role;
  Unit unit;
  std::vector<double> values;
};

std::string topology_json(const ScenarioSpec& spec, const Traces& tr) {
  using nlohmann::ordered_json;
  const std::string& b = spec.building;
  ordered_json ahus = ordered_json::array(), vavs = ordered_json::array();
  for (const auto& a : tr.ahus) ahus.push_back({{"id", a.id}});
  for (const auto& v : tr.vavs) {
    vavs.push_back({{"id", v.id},
                    {"ahu", tr.ahus[v.ahu].id},
                    {"zone", "Z" + v.id.substr(3)},
                    {"min_flow_cfm", v.q_min},
                    {"upper_limit_f", spec.zones.upper_limit_f}});
  }
  ordered_json rules = ordered_json::array();
  const auto rule = [&](const std::string& pattern, const std::string& eq, PointRole role) {
    rules.push_back({{"pattern", pattern}, {"equipment", eq}, {"role", to_string(role)}});
  };
  rule(b + ".AHU{n}.SAT", "AHU{n}", PointRole::AhuSupplyAirTemp);
  rule(b + ".AHU{n}.MAT", "AHU{n}", PointRole::AhuMixedAirTemp);
  rule(b + ".AHU{n}.RAT", "AHU{n}", PointRole::AhuReturnAirTemp);
  rule(b + ".AHU{n}.CCV", "AHU{n}", PointRole::AhuCoolingValveCmd);
  rule(b + ".AHU{n}.HCV", "AHU{n}", PointRole::AhuHeatingValveCmd);
  rule(b + ".AHU{n}.OAD", "AHU{n}", PointRole::EconomizerDamperPos);
  rule(b + ".VAV{n}.ZNT", "VAV{n}", PointRole::ZoneTemp);
  rule(b + ".VAV{n}.FLOW", "VAV{n}", PointRole::VavSupplyFlow);
  rule(b + ".VAV{n}.FLOWSP", "VAV{n}", PointRole::VavSupplyFlowSetpoint);
  rule(b + ".VAV{n}.HWV", "VAV{n}", PointRole::VavHeatingValveCmd);
  rule("OAT", b, PointRole::OutsideAirTemp);
  rule(b + ".HWST", b, PointRole::HotWaterSupplyTemp);
  ordered_json doc = {
      {"building", b},
      {"meters", {{"cooling", b + ".CHW.POWER"}, {"heating", b + ".HW.POWER"}}},
      {"schedule",
       {{"occupied_start", clock(spec.schedule.start_minute)},
        {"occupied_end", clock(spec.schedule.end_minute)},
        {"weekdays_only", spec.schedule.weekdays_only},
        {"utc_offset_minutes", spec.utc_offset_minutes}}},
      {"ahus", ahus},
      {"vavs", vavs},
      {"rules", rules}};
  return doc.dump(2) + "\n";
}

std::string run_ini(const ScenarioSpec& spec) {
  std::ostringstream o;
  o << "[paths]\n"
    << "topology = topology.json\n"
    << "points = points.csv\n"
    << "trends = trends.csv\n"
    << "weather = weather.csv\n"
    << "reference_weather = reference_year.csv\n"
    << "model = model.json\n"
    << "findings = findings.csv\n\n"
    << "[constants]\n"
    << "air_power_k = " << format_double(spec.air_power_k) << "\n"
    << "deadband_f = " << format_double(spec.deadband_f) << "\n"
    << "interval_s = " << spec.interval.count() << "\n\n"
    << "[fit]\n"
    << "train_fraction = 0.7\n"
    << "allow_partial = false\n\n"
    << "[thresholds]\n"
    << "correlation_min = 0.5\n"
    << "cooling_mpe_max = -5\n"
    << "heating_mpe_min = 5\n"
    << "occupied_flow_slack = 1.1\n"
    << "damper_rmspe_max = 20\n"
    << "min_persistence_days = 7\n"
    << "min_coverage = 0.5\n";
  return o.str();
}

void add_noise(std::vector<double>& v, Normal& rng, double rel) {
  if (rel == 0.0) return;
  for (auto& x : v) x += rel * std::abs(x) * rng();
}

}  // namespace

Bundle generate(const ScenarioSpec& spec) {
  spec.validate();
  Traces tr = simulate(spec);
  // VAV faults change flows that feed the AHU mixing; apply them first.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& f : spec.faults) {
      if (targets_vav(f.type) == (pass == 0)) inject_fault(tr, spec, f);
    }
  }
  Bundle out;
  for (const auto& f : spec.faults) out.truth.faults.push_back(waste_of(tr, spec, f));

  const std::size_t n = tr.time.size();
  const std::string& b = spec.building;
  const double k = spec.air_power_k;
  const auto& c = spec.c;

  // Emitted signals, in inventory order.
  std::vector<Point> points;
  for (const auto& a : tr.ahus) {
    const std::string p = b + "." + a.id + ".";
    std::vector<double> ccv(n), hcv(n), oad(n);
    for (std::size_t i = 0; i < n; ++i) {
      ccv[i] = 100.0 * a.ccv[i];
      hcv[i] = 100.0 * a.hcv[i];
      oad[i] = 100.0 * a.damper[i];
    }
    points.push_back({p + "SAT", a.id, PointRole::AhuSupplyAirTemp, Unit::Fahrenheit, a.t_sa});
    points.push_back({p + "MAT", a.id, PointRole::AhuMixedAirTemp, Unit::Fahrenheit, a.t_mix});
    points.push_back({p + "RAT", a.id, PointRole::AhuReturnAirTemp, Unit::Fahrenheit, a.t_ret});
    points.push_back({p + "CCV", a.id, PointRole::AhuCoolingValveCmd, Unit::Percent, ccv});
    points.push_back({p + "HCV", a.id, PointRole::AhuHeatingValveCmd, Unit::Percent, hcv});
    points.push_back({p + "OAD", a.id, PointRole::EconomizerDamperPos, Unit::Percent, oad});
  }
  for (const auto& v : tr.vavs) {
    const std::string p = b + "." + v.id + ".";
    points.push_back({p + "ZNT", v.id, PointRole::ZoneTemp, Unit::Fahrenheit, v.tz});
    points.push_back({p + "FLOW", v.id, PointRole::VavSupplyFlow, Unit::Cfm, v.q});
    points.push_back({p + "FLOWSP", v.id, PointRole::VavSupplyFlowSetpoint, Unit::Cfm, v.qs});
    if (v.reheat) {
      std::vector<double> h(n);
      for (std::size_t i = 0; i < n; ++i) h[i] = 100.0 * v.h[i];
      points.push_back({p + "HWV", v.id, PointRole::VavHeatingValveCmd, Unit::Percent, h});
    }
  }
  points.push_back({b + ".HWST", b, PointRole::HotWaterSupplyTemp, Unit::Fahrenheit, tr.hwst});
  Point oat{"OAT", b, PointRole::OutsideAirTemp, Unit::Fahrenheit, tr.oat};

  Normal noise(spec.seed ^ kNoiseStream);
  for (auto& p : points) {
    if (p.unit == Unit::Fahrenheit) add_noise(p.values, noise, spec.noise.temperature);
    if (p.role == PointRole::VavSupplyFlow) add_noise(p.values, noise, spec.noise.flow);
  }
  add_noise(oat.values, noise, spec.noise.temperature);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < points.size(); ++i) index[points[i].id] = i;
  const auto sig = [&](const std::string& id) -> std::vector<double>& { return points[index.at(id)].values; };

  // Features from the emitted values, exactly as the estimator will see them.
  std::map<std::string, std::vector<double>> power;
  const auto series = [&](const std::string& name) -> std::vector<double>& {
    auto& v = power[name];
    v.resize(n, 0.0);
    return v;
  };
  std::vector<double> sum_vc(n, 0.0), sum_vh(n, 0.0), sum_ac(n, 0.0), sum_ah(n, 0.0), sum_e(n, 0.0),
      sum_q(n, 0.0);
  std::vector<int> any_cool(n, 0), any_heat(n, 0);
  const auto& hwst = sig(b + ".HWST");
  for (const auto& a : tr.ahus) {
    const auto& sat = sig(b + "." + a.id + ".SAT");
    auto& qsum = series(a.id + "/flow_sum");
    for (auto vi : a.vavs) {
      const auto& v = tr.vavs[vi];
      const std::string p = b + "." + v.id + ".";
      const auto& q = sig(p + "FLOW");
      const auto& tz = sig(p + "ZNT");
      auto& clg = series(v.id + "/cooling");
      for (std::size_t i = 0; i < n; ++i) {
        qsum[i] += q[i];
        clg[i] = vav_clg(k, q[i], tz[i], sat[i]);
        sum_vc[i] += clg[i];
      }
      if (v.reheat) {
        const auto& hwv = sig(p + "HWV");
        auto& htg = series(v.id + "/heating");
        for (std::size_t i = 0; i < n; ++i) {
          htg[i] = vav_htg(k, hwst[i], sat[i], q[i], hwv[i] / 100.0);
          sum_vh[i] += htg[i];
        }
      }
    }
    const auto& mat = sig(b + "." + a.id + ".MAT");
    auto& ac = series(a.id + "/cooling");
    auto& ah = series(a.id + "/heating");
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = ahu_coil(k, spec.deadband_f, mat[i], sat[i], qsum[i]);
      ac[i] = p.cooling;
      ah[i] = p.heating;
      sum_ac[i] += p.cooling;
      sum_ah[i] += p.heating;
      any_cool[i] |= p.mode > 0;
      any_heat[i] |= p.mode < 0;
      sum_q[i] += qsum[i];
    }
  }

  // Cooling meter: the AHU-level model holds on cooling rows, the VAV-level
  // model on every row. On cooling rows the return-air sensors of all AHUs are
  // shifted by a common offset so that the economizer sum satisfies both.
  std::vector<double> chw(n), hw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool cooling_row = any_cool[i] && !any_heat[i];
    double e_nat = 0.0;
    for (const auto& a : tr.ahus) {
      e_nat += k * power[a.id + "/flow_sum"][i] *
               (sig(b + "." + a.id + ".RAT")[i] - sig(b + "." + a.id + ".MAT")[i]) / 1e6;
    }
    if (cooling_row) {
      ++out.truth.cooling_mode_rows;
      chw[i] = c[3] * sum_ac[i] + c[4];
      const double e_need = (chw[i] - c[2] - c[0] * sum_vc[i]) / c[1];
      const double delta = (e_need - e_nat) * 1e6 / (k * sum_q[i]);
      for (const auto& a : tr.ahus) sig(b + "." + a.id + ".RAT")[i] += delta;
    } else {
      chw[i] = c[0] * sum_vc[i] + c[1] * e_nat + c[2];
    }
    if (any_heat[i]) ++out.truth.heating_mode_rows;
    hw[i] = c[5] * sum_ah[i] + c[6] * sum_vh[i] + c[7];
  }
  for (const auto& a : tr.ahus) {
    const auto& rat = sig(b + "." + a.id + ".RAT");
    const auto& mat = sig(b + "." + a.id + ".MAT");
    const auto& qsum = power[a.id + "/flow_sum"];
    auto& e = series(a.id + "/economizer");
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = k * qsum[i] * (rat[i] - mat[i]) / 1e6;
      sum_e[i] += e[i];
    }
  }

  if (spec.noise.meter > 0.0) {
    for (auto* m : {&chw, &hw}) {
      double s = 0.0;
      for (double x : *m) s += std::abs(x);
      const double sigma = spec.noise.meter * s / static_cast<double>(n);
      for (auto& x : *m) x += sigma * noise();
    }
  }
  power["sum_vav_cooling"] = sum_vc;
  power["sum_vav_heating"] = sum_vh;
  power["sum_ahu_cooling"] = sum_ac;
  power["sum_ahu_heating"] = sum_ah;
  power["sum_economizer"] = sum_e;
  points.push_back({b + ".CHW.POWER", b, PointRole::BuildingCoolingPower, Unit::MmbtuPerHour, chw});
  points.push_back({b + ".HW.POWER", b, PointRole::BuildingHeatingPower, Unit::MmbtuPerHour, hw});
  out.truth.c = c;
  out.truth.rows = n;

  const int off = spec.utc_offset_minutes;
  {
    std::ostringstream o;
    o << "point_id,raw_name,unit\n";
    o << "OAT,OAT," << to_string(Unit::Fahrenheit) << "\n";
    for (const auto& p : points) o << p.id << ',' << p.id << ',' << to_string(p.unit) << '\n';
    out.points_csv = o.str();
  }
  {
    std::ostringstream o;
    write_trends_header(o);
    for (const auto& p : points) {
      for (std::size_t i = 0; i < n; ++i) write_trend_row(o, tr.time[i], p.id, p.values[i], off);
    }
    out.trends_csv = o.str();
  }
  {
    std::ostringstream o;
    write_trends_header(o);
    for (std::size_t i = 0; i < n; ++i) write_trend_row(o, tr.time[i], oat.id, oat.values[i], off);
    out.weather_csv = o.str();
  }
  {
    std::ostringstream o;
    write_trends_header(o);
    for (const auto& [name, v] : power) {
      for (std::size_t i = 0; i < n; ++i) write_trend_row(o, tr.time[i], name, v[i], off);
    }
    out.ground_truth_power_csv = o.str();
  }
  {
    std::ostringstream o;
    o << "day_of_year,oat_f\n";
    for (int d = 1; d <= 365; ++d) {
      const double t = spec.weather.mean_f +
                       spec.weather.reference_amplitude_f * std::sin(kTwoPi * (d - 105) / 365.0);
      o << d << ',' << format_double(std::round(t * 100.0) / 100.0) << '\n';
    }
    out.reference_year_csv = o.str();
  }
  out.topology_json = topology_json(spec, tr);
  out.run_ini = run_ini(spec);

  using nlohmann::ordered_json;
  ordered_json coeffs = ordered_json::object();
  for (std::size_t i = 0; i < 8; ++i) coeffs["c" + std::to_string(i + 1)] = c[i];
  ordered_json faults = ordered_json::array();
  for (const auto& r : out.truth.faults) {
    faults.push_back({{"type", to_string(r.injection.type)},
                      {"rule", detecting_rule(r.injection.type)},
                      {"equipment", r.injection.equipment},
                      {"start", format_timestamp(r.window.begin, off)},
                      {"end", format_timestamp(r.window.end, off)},
                      {"magnitude", r.injection.magnitude},
                      {"affected_rows", r.affected_rows},
                      {"waste_mmbtu", r.waste},
                      {"waste_signed_mmbtu", r.waste_signed}});
  }
  ordered_json gt = {
      {"generator",
       {{"rng", "mt19937_64"},
        {"normal", "Box-Muller, u = (x >> 11) * 2^-53, z = sqrt(-2 ln(1 - u1)) cos(2 pi u2)"},
        {"simulation_seed", spec.seed},
        {"noise_seed", spec.seed ^ kNoiseStream}}},
      {"building", b},
      {"start", format_timestamp(spec.start, off)},
      {"interval_s", spec.interval.count()},
      {"rows", n},
      {"air_power_k", spec.air_power_k},
      {"deadband_f", spec.deadband_f},
      {"coefficients", coeffs},
      {"noise",
       {{"temperature", spec.noise.temperature},
        {"flow", spec.noise.flow},
        {"meter", spec.noise.meter}}},
      {"cooling_mode_rows", out.truth.cooling_mode_rows},
      {"heating_mode_rows", out.truth.heating_mode_rows},
      {"faults", faults}};
  out.ground_truth_json = gt.dump(2) + "\n";
  return out;
}

void write_bundle(const Bundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const auto put = [&](const char* name, const std::string& text) {
    std::ofstream o(dir / name, std::ios::binary);
    if (!o) throw IoError("cannot write '" + (dir / name).string() + "'");
    o << text;
    if (!o) throw IoError("write failed: '" + (dir / name).string() + "'");
  };
  put("topology.json", bundle.topology_json);
  put("points.csv", bundle.points_csv);
  put("trends.csv", bundle.trends_csv);
  put("weather.csv", bundle.weather_csv);
  put("reference_year.csv", bundle.reference_year_csv);
  put("ground_truth.json", bundle.ground_truth_json);
  put("ground_truth_power.csv", bundle.ground_truth_power_csv);
  put("run.ini", bundle.run_ini);
}

}  // namespace apportion::synth
