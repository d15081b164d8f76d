#include <cmath>

#include <gtest/gtest.h>

#include "apportion/error.hpp"
#include "apportion/statistics.hpp"
#include "apportion/synth.hpp"

using namespace apportion;
using namespace apportion::synth;

namespace {

ScenarioSpec small() {
  ScenarioSpec s;
  s.seed = 3;
  s.n_ahus = 2;
  s.n_vavs_per_ahu = 3;
  s.duration_days = 7;
  return s;
}

std::size_t vav_index(const Traces& t, const std::string& id) {
  for (std::size_t i = 0; i < t.vavs.size(); ++i) {
    if (t.vavs[i].id == id) return i;
  }
  throw std::runtime_error("no vav " + id);
}

}  // namespace

TEST(Normal, SeededAndStandard) {
  Normal a(42), b(42), c(43);
  double sum = 0.0, sq = 0.0;
  bool differs = false;
  for (int i = 0; i < 20000; ++i) {
    const double x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
    sum += x;
    sq += x * x;
  }
  EXPECT_TRUE(differs);
  EXPECT_NEAR(sum / 20000, 0.0, 0.03);
  EXPECT_NEAR(sq / 20000, 1.0, 0.04);
}

TEST(Generate, SameSeedSameBytesOtherSeedDiffers) {
  const auto a = generate(small());
  const auto b = generate(small());
  EXPECT_EQ(a.trends_csv, b.trends_csv);
  EXPECT_EQ(a.ground_truth_json, b.ground_truth_json);
  EXPECT_EQ(a.topology_json, b.topology_json);
  auto other = small();
  other.seed = 4;
  EXPECT_NE(generate(other).trends_csv, a.trends_csv);
}

TEST(Generate, RowCountAndGroundTruth) {
  const auto spec = small();
  EXPECT_EQ(spec.rows(), 7u * 96u);
  const auto b = generate(spec);
  EXPECT_EQ(b.truth.rows, spec.rows());
  EXPECT_EQ(b.truth.c, spec.c);
  EXPECT_LE(b.truth.cooling_mode_rows + b.truth.heating_mode_rows, spec.rows());
  EXPECT_GT(b.truth.cooling_mode_rows, 0u);
  EXPECT_NE(b.ground_truth_json.find("\"cooling_mode_rows\""), std::string::npos);
}

TEST(InjectFault, CoolingLeakOnlyWhileValvesShut) {
  const auto spec = small();
  const auto clean = simulate(spec);
  auto tr = clean;
  const FaultInjection f{FaultType::CoolingValveLeak, "AHU1", 1, 5, 6.0};
  const auto rec = inject_fault(tr, spec, f);
  const auto& a = tr.ahus[0];
  const std::size_t first = 96, last = 6 * 96;
  std::size_t shut = 0;
  for (std::size_t i = 0; i < a.t_sa.size(); ++i) {
    const bool closed = a.ccv[i] == 0.0 && a.hcv[i] == 0.0;
    if (i >= first && i < last && closed) {
      EXPECT_NEAR(a.t_sa[i], a.t_mix[i] - 6.0, 1e-12);
      ++shut;
    } else {
      EXPECT_EQ(a.t_sa[i], clean.ahus[0].t_sa[i]) << i;
    }
  }
  EXPECT_EQ(rec.affected_rows, shut);
  EXPECT_GT(shut, 0u);
  EXPECT_GT(rec.waste, 0.0);
  // The other AHU is untouched.
  EXPECT_EQ(tr.ahus[1].t_sa, clean.ahus[1].t_sa);
}

TEST(InjectFault, ConfigErrorOnlyUnoccupiedRows) {
  const auto spec = small();
  const auto clean = simulate(spec);
  auto tr = clean;
  inject_fault(tr, spec, {FaultType::ConfigurationError, "VAV1-02", 0, 7, 2.0});
  const auto vi = vav_index(tr, "VAV1-02");
  const auto& v = tr.vavs[vi];
  for (std::size_t i = 0; i < v.q.size(); ++i) {
    if (tr.occupied[i]) {
      EXPECT_EQ(v.q[i], clean.vavs[vi].q[i]);
    } else {
      EXPECT_DOUBLE_EQ(v.q[i], 2.0 * v.q_min);
      EXPECT_DOUBLE_EQ(v.qs[i], 2.0 * v.q_min);
    }
  }
}

TEST(InjectFault, BrokenEconomizerDecorrelatesMixedAir) {
  const auto spec = small();
  auto tr = simulate(spec);
  inject_fault(tr, spec, {FaultType::EconomizerBroken, "AHU1", 0, 7, 0.0});
  const auto& a = tr.ahus[0];
  std::vector<double> est;
  for (std::size_t i = 0; i < a.t_mix.size(); ++i) {
    est.push_back(a.damper[i] * tr.oat[i] + (1 - a.damper[i]) * a.t_ret[i]);
  }
  EXPECT_LT(pearson(a.t_mix, est), 0.5);
  for (std::size_t i = 0; i < a.t_mix.size(); ++i) EXPECT_DOUBLE_EQ(a.t_mix[i], a.t_ret[i]);
}

TEST(InjectFault, DamperLeakWasteClosedForm) {
  ScenarioSpec spec;
  spec.seed = 5;
  spec.n_ahus = 1;
  spec.n_vavs_per_ahu = 2;
  spec.duration_days = 10;
  spec.weather = {80, 8, 0, 365, 0, 15};
  spec.zones.constant_temp_f = 74;
  spec.zones.reheat_every = 0;
  auto tr = simulate(spec);
  const auto rec = inject_fault(tr, spec, {FaultType::DamperLeak, "VAV1-01", 2, 7, 300.0});
  const double want = 1.08 * 300 * (74 - 55) * 168 * spec.c[0] / 1e6;
  EXPECT_NEAR(rec.waste, want, 1e-9 * want);
  EXPECT_EQ(rec.affected_rows, 7u * 96u);
}

TEST(InjectFault, Errors) {
  const auto spec = small();
  auto tr = simulate(spec);
  EXPECT_THROW(inject_fault(tr, spec, {FaultType::DamperStuck, "VAV9-01", 0, 1, 0}), Error);
  EXPECT_THROW(inject_fault(tr, spec, {FaultType::CoolingValveLeak, "AHU7", 0, 1, 6}), Error);
  EXPECT_THROW(inject_fault(tr, spec, {FaultType::DamperStuck, "VAV1-01", 6, 3, 0}), Error);
  inject_fault(tr, spec, {FaultType::DamperStuck, "VAV1-01", 0, 1, 0});
  EXPECT_THROW(inject_fault(tr, spec, {FaultType::DamperLeak, "VAV1-01", 2, 1, 50}), Error);
}

TEST(Spec, Validation) {
  auto s = small();
  EXPECT_NO_THROW(s.validate());
  s.n_ahus = 0;
  EXPECT_THROW(s.validate(), Error);
  s = small();
  s.interval = Seconds{7 * 60};
  EXPECT_THROW(s.validate(), Error);
  s = small();
  s.c[0] = -1;
  EXPECT_THROW(s.validate(), Error);
  s = small();
  s.faults = {{FaultType::EconomizerBroken, "AHU1", 0, 1, 1.5}};
  EXPECT_THROW(s.validate(), Error);
  s.faults = {{FaultType::EconomizerBroken, "VAV1-01", 0, 1, 0.5}};
  EXPECT_THROW(s.validate(), Error);
  s.faults = {{FaultType::DamperStuck, "VAV1-01", 5, 5, 0}};
  EXPECT_THROW(s.validate(), Error);
}

TEST(Scenario, IniParsing) {
  const auto s = parse_scenario(
      "[scenario]\nseed = 9\nn_ahus = 1\nn_vavs_per_ahu = 4\nduration_days = 10\n"
      "[coefficients]\nc1 = 1.2\n"
      "[noise]\nmeter = 0.01\n"
      "[schedule]\noccupied_start = 06:30\n"
      "[zones]\nconstant_temp_f = 75\n"
      "[fault1]\ntype = damper_stuck\nequipment = VAV1-02\nstart_day = 2\nduration_days = 7\nmagnitude = 0\n");
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.n_vavs_per_ahu, 4);
  EXPECT_DOUBLE_EQ(s.c[0], 1.2);
  EXPECT_DOUBLE_EQ(s.c[1], ScenarioSpec{}.c[1]);
  EXPECT_DOUBLE_EQ(s.noise.meter, 0.01);
  EXPECT_EQ(s.schedule.start_minute, 390);
  EXPECT_EQ(*s.zones.constant_temp_f, 75.0);
  ASSERT_EQ(s.faults.size(), 1u);
  EXPECT_EQ(s.faults[0].type, FaultType::DamperStuck);
  EXPECT_EQ(s.faults[0].equipment, "VAV1-02");
  EXPECT_THROW(parse_scenario("[fault1]\ntype = melting\nequipment = AHU1\n"), Error);
  EXPECT_THROW(parse_scenario("[scenario]\nn_ahus = many\n"), Error);
}

TEST(FaultType, Names) {
  for (auto t : {FaultType::EconomizerBroken, FaultType::CoolingValveLeak, FaultType::HeatingValveLeak,
                 FaultType::ConfigurationError, FaultType::DamperStuck, FaultType::DamperLeak}) {
    EXPECT_EQ(parse_fault_type(to_string(t)), t);
  }
  EXPECT_EQ(detecting_rule(FaultType::DamperLeak), 5);
  EXPECT_TRUE(targets_vav(FaultType::ConfigurationError));
  EXPECT_FALSE(targets_vav(FaultType::HeatingValveLeak));
}
