#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "apportion/building_estimate.hpp"
#include "apportion/building_model.hpp"
#include "apportion/ingest.hpp"
#include "apportion/synth.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using namespace apportion;

/// Fresh, empty directory under the system temp dir.
inline fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("apportion-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  o << text;
}

struct Pipeline {
  Topology topo;
  PointBinding binding;
  TrendSet trends;
  BuildingEstimate est;
};

inline Pipeline load_bundle(const fs::path& dir) {
  Pipeline p;
  p.topo = load_topology(dir / "topology.json");
  const auto inv = read_point_inventory(dir / "points.csv");
  p.binding = bind_points(p.topo.graph, inv, p.topo.rules);
  const std::vector<fs::path> files{dir / "trends.csv", dir / "weather.csv"};
  p.trends = read_trends(files, p.binding);
  p.est = estimate_building(p.topo.graph, p.binding, p.trends);
  return p;
}

inline Pipeline run_bundle(const synth::Bundle& b, const std::string& name) {
  const auto dir = temp_dir(name);
  synth::write_bundle(b, dir);
  return load_bundle(dir);
}

// Scenarios shared by the unit and acceptance tests.

/// 2 AHUs x 10 VAVs, 14 days, mixed season, no noise, no faults.
inline synth::ScenarioSpec recovery_spec() {
  synth::ScenarioSpec s;
  s.seed = 2024;
  return s;
}

/// 3 AHUs x 4 VAVs over 21 days, 2% noise on every signal.
inline synth::ScenarioSpec healthy_spec() {
  synth::ScenarioSpec s;
  s.seed = 11;
  s.n_ahus = 3;
  s.n_vavs_per_ahu = 4;
  s.duration_days = 21;
  s.noise = {0.02, 0.02, 0.02};
  return s;
}

/// healthy_spec plus one fault of each rule type on days 3..17.
inline synth::ScenarioSpec five_fault_spec() {
  auto s = healthy_spec();
  using synth::FaultType;
  s.faults = {
      {FaultType::EconomizerBroken, "AHU1", 3, 14, 0.0},
      {FaultType::CoolingValveLeak, "AHU2", 3, 14, 6.0},
      {FaultType::HeatingValveLeak, "AHU3", 3, 14, 6.0},
      {FaultType::ConfigurationError, "VAV2-02", 3, 14, 2.0},
      {FaultType::DamperStuck, "VAV3-03", 3, 14, 0.0},
  };
  return s;
}

/// Hot weather, zones at a constant 74 F and supply air at 55 F on every row;
/// VAV1-01 leaks 300 CFM above its setpoint on days 7..14.
inline synth::ScenarioSpec damper_leak_spec() {
  synth::ScenarioSpec s;
  s.seed = 5;
  s.n_ahus = 1;
  s.n_vavs_per_ahu = 6;
  s.duration_days = 21;
  s.weather.mean_f = 80;
  s.weather.daily_amplitude_f = 8;
  s.weather.day_sigma_f = 0;
  s.zones.constant_temp_f = 74;
  s.zones.reheat_every = 0;
  s.faults = {{synth::FaultType::DamperLeak, "VAV1-01", 7, 7, 300.0}};
  return s;
}

}  // namespace fixtures
