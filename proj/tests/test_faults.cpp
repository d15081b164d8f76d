#include <cmath>

#include <gtest/gtest.h>

#include "apportion/error.hpp"
#include "apportion/faults.hpp"
#include "apportion/statistics.hpp"
#include "support/fixtures.hpp"

using namespace apportion;

namespace {

struct Scenario {
  synth::Bundle bundle;
  fixtures::Pipeline pipe;
  Window all() const { return {pipe.est.frame.start(), pipe.est.frame.end()}; }
  const EquipmentGraph& graph() const { return pipe.topo.graph; }
};

Scenario load(const synth::ScenarioSpec& spec, const std::string& name) {
  Scenario s{synth::generate(spec), {}};
  s.pipe = fixtures::run_bundle(s.bundle, name);
  return s;
}

const Scenario& faulty() {
  static const Scenario s = load(fixtures::five_fault_spec(), "faults5");
  return s;
}

const Scenario& healthy() {
  static const Scenario s = load(fixtures::healthy_spec(), "faults0");
  return s;
}

// Seven days fully inside the injection window (days 3..17).
Window injected_week(const Scenario& s) {
  const auto b = s.pipe.est.frame.start() + 5 * kDay;
  return {b, b + 7 * kDay};
}

std::vector<Sample> scaled(const std::vector<Sample>& v, double k) {
  std::vector<Sample> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i]) out[i] = k * *v[i];
  }
  return out;
}

}  // namespace

TEST(Thresholds, Validation) {
  EXPECT_NO_THROW(Thresholds{}.validate());
  Thresholds t;
  t.correlation_min = 1.0;
  EXPECT_THROW(t.validate(), Error);
  t = {};
  t.damper_rmspe_max = 0;
  EXPECT_THROW(t.validate(), Error);
  t = {};
  t.min_persistence = kHour * 12;
  EXPECT_THROW(t.validate(), Error);
}

TEST(Rules, Labels) {
  EXPECT_EQ(rule_label(RuleId::EconomizerBroken), "Economizer damper broken");
  EXPECT_EQ(rule_label(RuleId::DamperStuck), "VAV damper leaking or stuck");
  EXPECT_EQ(rule_from_number(3), RuleId::HeatingValveLeak);
  EXPECT_THROW(rule_from_number(6), Error);
  EXPECT_TRUE(rule_targets_vav(RuleId::ConfigurationError));
  EXPECT_FALSE(rule_targets_vav(RuleId::CoolingValveLeak));
}

TEST(Economizer, HealthyCorrelatesBrokenDoesNot) {
  const Thresholds th;
  const auto& h = healthy();
  const auto ok = rule_economizer(h.pipe.est, "AHU1", injected_week(h), th);
  EXPECT_EQ(ok.verdict, Verdict::Healthy);
  EXPECT_GT(*ok.statistic, 0.9);
  const auto& f = faulty();
  const auto bad = rule_economizer(f.pipe.est, "AHU1", injected_week(f), th);
  EXPECT_EQ(bad.verdict, Verdict::Fault);
  EXPECT_LT(*bad.statistic, 0.5);
}

namespace {

// Outside air hotter than the zones on every row: the damper sits at its
// minimum and the cooling coil never shuts off.
synth::ScenarioSpec always_hot() {
  auto spec = fixtures::damper_leak_spec();
  spec.faults.clear();
  spec.weather.mean_f = 92;
  spec.weather.daily_amplitude_f = 4;
  return spec;
}

}  // namespace

TEST(Economizer, DamperThatNeverMovesIsInconclusive) {
  const auto spec = always_hot();
  const auto s = load(spec, "hot");
  const auto r = rule_economizer(s.pipe.est, "AHU1", {s.all().begin, s.all().begin + 7 * kDay}, Thresholds{});
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
  EXPECT_EQ(r.reason, "insufficient damper movement");
}

TEST(ValveLeaks, MpeMatchesInjectedOffset) {
  const Thresholds th;
  const auto& f = faulty();
  const auto w = injected_week(f);
  const auto clg = rule_cooling_valve_leak(f.pipe.est, "AHU2", w, th);
  ASSERT_EQ(clg.verdict, Verdict::Fault);
  // Recompute -6 / T_MA over the same idle rows from the emitted signals.
  const auto& fr = f.pipe.est.frame;
  const auto& mat = fr.column(col::derived("AHU2", col::kMixedAir));
  const auto& ccv = fr.column(col::input("AHU2", PointRole::AhuCoolingValveCmd));
  const auto& hcv = fr.column(col::input("AHU2", PointRole::AhuHeatingValveCmd));
  const auto& sat = fr.column(col::input("AHU2", PointRole::AhuSupplyAirTemp));
  const auto [a, b] = fr.row_range(w);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = a; i < b; ++i) {
    if (*ccv[i] > 0.01 || *hcv[i] > 0.01) continue;
    sum += (*sat[i] - *mat[i]) / *mat[i];
    ++n;
  }
  ASSERT_GT(n, 0u);
  EXPECT_NEAR(*clg.statistic, 100.0 * sum / static_cast<double>(n), 1e-9);
  EXPECT_LT(*clg.statistic, -5.0);

  const auto htg = rule_heating_valve_leak(f.pipe.est, "AHU3", w, th);
  ASSERT_EQ(htg.verdict, Verdict::Fault);
  EXPECT_GT(*htg.statistic, 5.0);
  EXPECT_EQ(rule_cooling_valve_leak(f.pipe.est, "AHU3", w, th).verdict, Verdict::Healthy);
  EXPECT_EQ(rule_heating_valve_leak(f.pipe.est, "AHU2", w, th).verdict, Verdict::Healthy);
}

TEST(ValveLeaks, HandMpeAtSeventyDegrees) {
  // T_SA = T_MA -/+ 6 at T_MA = 70.
  const std::vector<double> mat(10, 70.0), cold(10, 64.0), warm(10, 76.0);
  EXPECT_NEAR(mpe(cold, mat), -8.571428571428571, 1e-12);
  EXPECT_NEAR(mpe(warm, mat), 8.571428571428571, 1e-12);
}

TEST(ValveLeaks, ValveNeverClosedIsInconclusive) {
  const auto spec = always_hot();
  const auto s = load(spec, "hotvalve");
  const auto r = rule_cooling_valve_leak(s.pipe.est, "AHU1", {s.all().begin, s.all().begin + 7 * kDay}, Thresholds{});
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
  EXPECT_EQ(r.reason, "cooling valve never closed");
}

TEST(ConfigError, HealthyMisconfiguredAndHotZone) {
  const Thresholds th;
  const auto& h = healthy();
  EXPECT_EQ(rule_config_error(h.pipe.est, h.graph(), "VAV2-02", injected_week(h), th).verdict, Verdict::Healthy);
  const auto& f = faulty();
  const auto r = rule_config_error(f.pipe.est, f.graph(), "VAV2-02", injected_week(f), th);
  EXPECT_EQ(r.verdict, Verdict::Fault);
  EXPECT_DOUBLE_EQ(*r.statistic, 1.0);

  auto spec = fixtures::five_fault_spec();
  spec.zones.constant_temp_f = 86;  // above the 78 F upper limit even with sensor noise
  const auto hot = load(spec, "hotzone");
  EXPECT_EQ(rule_config_error(hot.pipe.est, hot.graph(), "VAV2-02", injected_week(hot), th).verdict,
            Verdict::Healthy);
}

TEST(ConfigError, MissingMinFlowIsAnError) {
  const auto& f = faulty();
  EquipmentGraph g = f.graph();
  for (auto& v : g.vavs) v.min_flow_cfm.reset();
  try {
    rule_config_error(f.pipe.est, g, "VAV2-02", injected_week(f), Thresholds{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("VAV missing min-flow config"), std::string::npos);
  }
}

TEST(DamperStuck, StuckClosedIsFound) {
  const auto& f = faulty();
  const auto r = rule_damper_stuck(f.pipe.est, "VAV3-03", injected_week(f), Thresholds{});
  EXPECT_EQ(r.verdict, Verdict::Fault);
  EXPECT_NEAR(*r.statistic, 100.0, 1e-9);
  const auto ok = rule_damper_stuck(f.pipe.est, "VAV3-02", injected_week(f), Thresholds{});
  EXPECT_EQ(ok.verdict, Verdict::Healthy);
  EXPECT_LT(*ok.statistic, 5.0);
}

TEST(DamperStuck, TenPercentHighFlowIsTolerated) {
  BuildingEstimate est = healthy().pipe.est;
  const auto sp = col::input("VAV1-01", PointRole::VavSupplyFlowSetpoint);
  est.frame.set_column(col::input("VAV1-01", PointRole::VavSupplyFlow), scaled(est.frame.column(sp), 1.1));
  const auto r = rule_damper_stuck(est, "VAV1-01", injected_week(healthy()), Thresholds{});
  EXPECT_EQ(r.verdict, Verdict::Healthy);
  EXPECT_NEAR(*r.statistic, 10.0, 1e-9);
}

TEST(DamperStuck, ZeroSetpointIsInconclusive) {
  BuildingEstimate est = healthy().pipe.est;
  const auto sp = col::input("VAV1-01", PointRole::VavSupplyFlowSetpoint);
  est.frame.set_column(sp, scaled(est.frame.column(sp), 0.0));
  const auto r = rule_damper_stuck(est, "VAV1-01", injected_week(healthy()), Thresholds{});
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
  EXPECT_EQ(r.reason, "degenerate flow setpoint");
}

TEST(Coverage, SparseWindowIsInconclusive) {
  BuildingEstimate est = faulty().pipe.est;
  const auto name = col::input("VAV3-03", PointRole::VavSupplyFlow);
  auto v = est.frame.column(name);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i % 3 != 0) v[i].reset();
  }
  est.frame.set_column(name, v);
  const auto r = rule_damper_stuck(est, "VAV3-03", injected_week(faulty()), Thresholds{});
  EXPECT_EQ(r.verdict, Verdict::Inconclusive);
  EXPECT_EQ(r.reason, "insufficient data coverage");
}

TEST(RunAll, FiveFaultsFiveFindings) {
  const auto& f = faulty();
  const auto d = run_all(f.pipe.est, f.graph(), f.all(), Thresholds{});
  ASSERT_EQ(d.findings.size(), 5u);
  const std::vector<std::pair<RuleId, std::string>> want{{RuleId::EconomizerBroken, "AHU1"},
                                                         {RuleId::CoolingValveLeak, "AHU2"},
                                                         {RuleId::HeatingValveLeak, "AHU3"},
                                                         {RuleId::ConfigurationError, "VAV2-02"},
                                                         {RuleId::DamperStuck, "VAV3-03"}};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& x = d.findings[i];
    EXPECT_EQ(x.rule, want[i].first);
    EXPECT_EQ(x.equipment, want[i].second);
    EXPECT_GE(x.persistence, Thresholds{}.min_persistence);
    EXPECT_EQ(x.persistence, x.window.length());
    EXPECT_FALSE(x.evidence.empty());
    // The finding covers the injected span.
    const auto inj = f.bundle.truth.faults[i].window;
    EXPECT_LE(x.window.begin, inj.begin + kDay);
    EXPECT_GE(x.window.end, inj.end - kDay);
  }
}

TEST(RunAll, HealthyTwinHasNoFindings) {
  const auto& h = healthy();
  const auto d = run_all(h.pipe.est, h.graph(), h.all(), Thresholds{});
  EXPECT_TRUE(d.findings.empty());
}

TEST(RunAll, DeterministicAndShortWindowWarns) {
  const auto& f = faulty();
  const auto a = run_all(f.pipe.est, f.graph(), f.all(), Thresholds{});
  const auto b = run_all(f.pipe.est, f.graph(), f.all(), Thresholds{});
  ASSERT_EQ(a.findings.size(), b.findings.size());
  for (std::size_t i = 0; i < a.findings.size(); ++i) {
    EXPECT_EQ(a.findings[i].window, b.findings[i].window);
    EXPECT_EQ(a.findings[i].statistic, b.findings[i].statistic);
  }
  const Window shortw{f.all().begin, f.all().begin + 3 * kDay};
  const auto s = run_all(f.pipe.est, f.graph(), shortw, Thresholds{});
  EXPECT_TRUE(s.findings.empty());
  ASSERT_FALSE(s.warnings.empty());
  EXPECT_NE(s.warnings[0].find("shorter than min_persistence"), std::string::npos);
}

TEST(RunAll, NoFindingFromLowCoverageData) {
  BuildingEstimate est = faulty().pipe.est;
  const auto name = col::input("VAV3-03", PointRole::VavSupplyFlow);
  auto v = est.frame.column(name);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i % 4 != 0) v[i].reset();
  }
  est.frame.set_column(name, v);
  const auto d = run_all(est, faulty().graph(), faulty().all(), Thresholds{});
  for (const auto& x : d.findings) EXPECT_NE(x.equipment, "VAV3-03");
  bool logged = false;
  for (const auto& e : d.inconclusive) logged |= e.equipment == "VAV3-03" && e.reason == "insufficient data coverage";
  EXPECT_TRUE(logged);
}
