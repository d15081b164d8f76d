#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "apportion/building_model.hpp"
#include "apportion/error.hpp"

using namespace apportion;

namespace {

const char* kBasic = R"({
  "building": "B",
  "meters": {"cooling": "B.CHW", "heating": "B.HW"},
  "ahus": [{"id": "AHU1"}],
  "vavs": [
    {"id": "VAV1", "ahu": "AHU1", "zone": "Z1", "min_flow_cfm": 150, "upper_limit_f": 78},
    {"id": "VAV2", "ahu": "AHU1", "zone": "Z2"}
  ],
  "rules": [
    {"pattern": "*AHU{n}.SAT", "equipment": "AHU{n}", "role": "AhuSupplyAirTemp"},
    {"pattern": "*AHU{n}.MAT", "equipment": "AHU{n}", "role": "AhuMixedAirTemp"},
    {"pattern": "*VAV{n}.ZNT", "equipment": "VAV{n}", "role": "ZoneTemp"},
    {"pattern": "*VAV{n}.FLOW", "equipment": "VAV{n}", "role": "VavSupplyFlow"},
    {"pattern": "OAT", "equipment": "B", "role": "OutsideAirTemp"}
  ]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

std::vector<PointInfo> inventory() {
  return {{"p1", "BLDG.AHU1.SAT", Unit::Fahrenheit}, {"p2", "BLDG.AHU1.MAT", Unit::Fahrenheit},
          {"p3", "BLDG.VAV1.ZNT", Unit::Fahrenheit}, {"p4", "BLDG.VAV1.FLOW", Unit::Cfm},
          {"p5", "BLDG.VAV2.ZNT", Unit::Fahrenheit}, {"p6", "BLDG.VAV2.FLOW", Unit::Cfm},
          {"OAT", "OAT", Unit::Fahrenheit},          {"B.CHW", "CHW", Unit::MmbtuPerHour},
          {"B.HW", "HW", Unit::MmbtuPerHour},        {"p7", "BLDG.CHILLER.KW", Unit::Fraction}};
}

}  // namespace

TEST(LoadMetadata, OneAhuTwoVavs) {
  const auto t = parse_topology(kBasic);
  EXPECT_EQ(t.graph.ahus.size(), 1u);
  EXPECT_EQ(t.graph.vavs.size(), 2u);
  EXPECT_EQ(t.graph.zone_count(), 2u);
  EXPECT_TRUE(t.graph.warnings.empty());
  EXPECT_EQ(t.graph.children("AHU1").size(), 2u);
  EXPECT_EQ(*t.graph.find_vav("VAV1")->min_flow_cfm, 150.0);
  EXPECT_FALSE(t.graph.find_vav("VAV2")->min_flow_cfm);
}

TEST(LoadMetadata, UnknownParentNamesTheVav) {
  try {
    parse_topology(replace(kBasic, R"("id": "VAV2", "ahu": "AHU1")", R"("id": "VAV2", "ahu": "AHU9")"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("VAV2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("AHU9"), std::string::npos);
  }
}

TEST(LoadMetadata, OrphanInSingleAhuBuildingIsAssigned) {
  const auto t = parse_topology(replace(kBasic, R"("id": "VAV2", "ahu": "AHU1")", R"("id": "VAV2")"));
  EXPECT_EQ(*t.graph.find_vav("VAV2")->parent_ahu, "AHU1");
  EXPECT_FALSE(t.graph.find_vav("VAV2")->unmapped);
  ASSERT_EQ(t.graph.warnings.size(), 1u);
  EXPECT_NE(t.graph.warnings[0].find("VAV2"), std::string::npos);
}

TEST(LoadMetadata, OrphanWithExcludePolicyIsUnmapped) {
  auto doc = replace(kBasic, R"("id": "VAV2", "ahu": "AHU1")", R"("id": "VAV2")");
  doc = replace(doc, R"("building": "B",)", R"("building": "B", "unmapped_vav_policy": "exclude",)");
  const auto t = parse_topology(doc);
  EXPECT_TRUE(t.graph.find_vav("VAV2")->unmapped);
  EXPECT_EQ(t.graph.children("AHU1").size(), 1u);
}

TEST(LoadMetadata, DuplicateIdAndMissingMeter) {
  EXPECT_THROW(parse_topology(replace(kBasic, R"("id": "VAV2")", R"("id": "VAV1")")), Error);
  try {
    parse_topology(replace(kBasic, R"("cooling": "B.CHW", )", ""));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("BuildingCoolingPower"), std::string::npos);
  }
  EXPECT_THROW(parse_topology("{not json"), IoError);
}

TEST(BindPoints, DirectRuleHitAndUnmatched) {
  const auto t = parse_topology(kBasic);
  const auto inv = inventory();
  const auto b = bind_points(t.graph, inv, t.rules);
  ASSERT_NE(b.point("AHU1", PointRole::AhuSupplyAirTemp), nullptr);
  EXPECT_EQ(*b.point("AHU1", PointRole::AhuSupplyAirTemp), "p1");
  EXPECT_EQ(*b.point("VAV2", PointRole::VavSupplyFlow), "p6");
  EXPECT_EQ(*b.point("B", PointRole::BuildingCoolingPower), "B.CHW");
  EXPECT_EQ(b.unmatched_points, std::vector<std::string>{"p7"});
  EXPECT_EQ(b.key_of("p3")->equipment, "VAV1");
}

TEST(BindPoints, FallbacksAreListed) {
  const auto t = parse_topology(kBasic);
  const auto inv = inventory();
  const auto b = bind_points(t.graph, inv, t.rules);
  EXPECT_EQ(b.fallback("VAV1", PointRole::VavSupplyAirTemp), Fallback::ParentAhuSupplyAirTemp);
  EXPECT_EQ(b.fallback("AHU1", PointRole::AhuReturnAirTemp), Fallback::MeanChildZoneTemp);
  EXPECT_EQ(b.fallback("VAV1", PointRole::VavMinFlow), Fallback::ConfiguredConstant);
  EXPECT_EQ(b.fallback("VAV2", PointRole::VavMinFlow), Fallback::RuleSkipped);
  EXPECT_EQ(b.fallback("VAV1", PointRole::OccupiedCmd), Fallback::OccupancySchedule);
  EXPECT_EQ(b.fallback("B", PointRole::HotWaterSupplyTemp), Fallback::NoReheat);
  EXPECT_NO_THROW(require_model_inputs(t.graph, b));
}

TEST(BindPoints, UnitMismatchIsRejected) {
  const auto t = parse_topology(kBasic);
  auto inv = inventory();
  inv[3].unit = Unit::Fahrenheit;  // flow point in degF
  try {
    bind_points(t.graph, inv, t.rules);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unit mismatch"), std::string::npos);
  }
}

TEST(BindPoints, PercentAcceptedForCommands) {
  EXPECT_TRUE(unit_accepted(PointRole::EconomizerDamperPos, Unit::Percent));
  EXPECT_TRUE(unit_accepted(PointRole::EconomizerDamperPos, Unit::Fraction));
  EXPECT_FALSE(unit_accepted(PointRole::VavSupplyFlow, Unit::Percent));
}

TEST(BindPoints, ConflictingRolesAreRejected) {
  auto t = parse_topology(kBasic);
  t.rules.push_back({"BLDG.AHU{n}.SAT", "AHU{n}", PointRole::AhuMixedAirTemp});
  const auto inv = inventory();
  EXPECT_THROW(bind_points(t.graph, inv, t.rules), Error);
}

TEST(BindPoints, MissingRequiredRoleIsNamed) {
  const auto t = parse_topology(kBasic);
  auto inv = inventory();
  inv.erase(inv.begin());  // AHU1 supply air
  const auto b = bind_points(t.graph, inv, t.rules);
  try {
    require_model_inputs(t.graph, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("AHU1/AhuSupplyAirTemp"), std::string::npos);
  }
}

TEST(BindPoints, IndependentOfInventoryOrder) {
  const auto t = parse_topology(kBasic);
  auto inv = inventory();
  const auto ref = bind_points(t.graph, inv, t.rules);
  std::mt19937 rng(4);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(inv.begin(), inv.end(), rng);
    const auto b = bind_points(t.graph, inv, t.rules);
    EXPECT_EQ(b.bound, ref.bound);
    EXPECT_EQ(b.unmatched_points, ref.unmatched_points);
    ASSERT_EQ(b.unresolved.size(), ref.unresolved.size());
    for (std::size_t j = 0; j < b.unresolved.size(); ++j) {
      EXPECT_EQ(b.unresolved[j].key, ref.unresolved[j].key);
      EXPECT_EQ(b.unresolved[j].fallback, ref.unresolved[j].fallback);
    }
  }
}

TEST(Schedule, WeekdayWindowInLocalTime) {
  OccupancySchedule s;
  s.utc_offset_minutes = -480;
  // Monday 2015-03-02.
  EXPECT_FALSE(s.occupied(parse_timestamp("2015-03-02T06:45:00-08:00")));
  EXPECT_TRUE(s.occupied(parse_timestamp("2015-03-02T07:00:00-08:00")));
  EXPECT_TRUE(s.occupied(parse_timestamp("2015-03-02T18:45:00-08:00")));
  EXPECT_FALSE(s.occupied(parse_timestamp("2015-03-02T19:00:00-08:00")));
  EXPECT_FALSE(s.occupied(parse_timestamp("2015-03-07T12:00:00-08:00")));  // Saturday
  s.weekdays_only = false;
  EXPECT_TRUE(s.occupied(parse_timestamp("2015-03-07T12:00:00-08:00")));
}
