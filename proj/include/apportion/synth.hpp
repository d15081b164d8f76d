#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "apportion/building_model.hpp"
#include "apportion/time.hpp"

namespace apportion::synth {

enum class FaultType {
  EconomizerBroken,    ///< actual outside-air fraction fixed at `magnitude`
  CoolingValveLeak,    ///< T_SA = T_MA - magnitude while both coil valves are shut
  HeatingValveLeak,    ///< T_SA = T_MA + magnitude while both coil valves are shut
  ConfigurationError,  ///< unoccupied flow and setpoint = magnitude * q_min
  DamperStuck,         ///< flow fixed at `magnitude` CFM
  DamperLeak,          ///< flow = setpoint + magnitude CFM
};

std::string_view to_string(FaultType t);
FaultType parse_fault_type(std::string_view s);
/// Detection rule number (1..5) that should flag the fault.
int detecting_rule(FaultType t);
bool targets_vav(FaultType t);

struct FaultInjection {
  FaultType type;
  std::string equipment;
  double start_day = 0.0;
  double duration_days = 7.0;
  double magnitude = 0.0;
};

struct Weather {
  double mean_f = 58.0;
  double daily_amplitude_f = 14.0;
  double seasonal_amplitude_f = 0.0;
  double seasonal_period_days = 365.0;
  /// Standard deviation of a per-day offset.
  double day_sigma_f = 2.0;
  /// Amplitude of the seasonal swing in the reference-year file.
  double reference_amplitude_f = 15.0;
};

struct Zones {
  double setpoint_min_f = 71.0;
  double setpoint_max_f = 73.0;
  double swing_f = 1.0;
  /// When set every zone sits at this temperature.
  std::optional<double> constant_temp_f;
  double min_flow_lo = 150.0;
  double min_flow_hi = 250.0;
  double max_flow_lo = 800.0;
  double max_flow_hi = 1200.0;
  /// Every n-th VAV (1-based index divisible by n) has a reheat coil; 0 for none.
  int reheat_every = 2;
  double upper_limit_f = 78.0;
};

struct AhuControl {
  double damper_min = 0.4;
  /// Coil stays off while |T_MA - T_SA setpoint| is below this.
  double idle_band_f = 1.5;
  double sat_cool_f = 55.0;
  double sat_heat_f = 63.0;
  double reset_high_oat_f = 65.0;
  double reset_low_oat_f = 50.0;
  double hot_water_f = 140.0;
};

/// Relative standard deviations: temperatures sigma = r |T|, flows sigma = r q,
/// meters sigma = r mean(meter).
struct Noise {
  double temperature = 0.0;
  double flow = 0.0;
  double meter = 0.0;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::string building = "SYN";
  int n_ahus = 2;
  int n_vavs_per_ahu = 10;
  double duration_days = 14.0;
  Seconds interval{900};
  Timestamp start = parse_timestamp("2015-03-02T00:00:00-08:00");
  int utc_offset_minutes = -480;
  /// c1..c8 at indices 0..7.
  std::array<double, 8> c{1.10, -1.05, 0.04, 1.08, 0.05, 1.15, 0.90, 0.03};
  Noise noise;
  Weather weather;
  OccupancySchedule schedule;
  Zones zones;
  AhuControl ahu;
  double air_power_k = 1.08;
  double deadband_f = 0.5;
  std::vector<FaultInjection> faults;

  std::size_t rows() const;
  /// Throws Error on inconsistent values or injection windows.
  void validate() const;
};

/// Scenario INI (sections [scenario] [coefficients] [noise] [weather] [schedule]
/// [zones] [ahu] [faultN]); unlisted keys keep their defaults.
ScenarioSpec parse_scenario(std::string_view ini_text);
ScenarioSpec read_scenario(const std::filesystem::path& path);

/// Physical state of every signal before sensor noise.
struct VavTrace {
  std::string id;
  std::size_t ahu = 0;
  double q_min = 0.0;
  double q_max = 0.0;
  bool reheat = false;
  std::vector<double> tz, q, qs, h;
};

struct AhuTrace {
  std::string id;
  std::vector<std::size_t> vavs;
  std::vector<double> damper, oa_fraction, t_ret, t_mix, t_sa, sat_sp, ccv, hcv;
};

struct Traces {
  std::vector<Timestamp> time;
  std::vector<double> oat, hwst;
  std::vector<bool> occupied;
  std::vector<AhuTrace> ahus;
  std::vector<VavTrace> vavs;
  std::vector<FaultInjection> applied;
};

struct WasteRecord {
  FaultInjection injection;
  Window window;
  std::size_t affected_rows = 0;
  /// Sum over the window of faulty minus ideal power times the interval, with
  /// the true coefficients; MMBTU. `waste` is clamped at zero.
  double waste_signed = 0.0;
  double waste = 0.0;
};

/// Applies one injection to the traces, re-derives the affected AHU and returns
/// the analytic waste on the resulting state. Throws Error for unknown
/// equipment, a window outside the traces or a second injection on the same
/// equipment.
WasteRecord inject_fault(Traces& traces, const ScenarioSpec& spec, const FaultInjection& injection);

/// Analytic waste of an already applied injection on the current traces.
WasteRecord waste_of(const Traces& traces, const ScenarioSpec& spec, const FaultInjection& injection);

/// Clean traces without faults.
Traces simulate(const ScenarioSpec& spec);

struct GroundTruth {
  std::array<double, 8> c{};
  std::size_t rows = 0;
  /// Rows where no AHU heats and at least one cools, by the deadband rule on
  /// the emitted temperatures.
  std::size_t cooling_mode_rows = 0;
  std::size_t heating_mode_rows = 0;
  std::vector<WasteRecord> faults;
};

struct Bundle {
  std::string topology_json;
  std::string points_csv;
  std::string trends_csv;
  std::string weather_csv;
  std::string reference_year_csv;
  std::string ground_truth_json;
  std::string ground_truth_power_csv;
  std::string run_ini;
  GroundTruth truth;
};

/// Simulates the scenario, injects its faults, adds sensor noise and computes
/// both building meters from the linear models with the true coefficients.
Bundle generate(const ScenarioSpec& spec);

/// Writes the bundle files into `dir` (created if missing).
void write_bundle(const Bundle& bundle, const std::filesystem::path& dir);

/// Seeded normal deviates: mt19937_64 with Box-Muller on 53-bit uniforms
/// u = (x >> 11) * 2^-53, z = sqrt(-2 ln(1 - u1)) cos(2 pi u2).
class Normal {
 public:
  explicit Normal(std::uint64_t seed) : gen_(seed) {}
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double operator()();

 private:
  std::mt19937_64 gen_;
};

}  // namespace apportion::synth
