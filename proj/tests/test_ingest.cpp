#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "apportion/error.hpp"
#include "apportion/ingest.hpp"
#include "support/fixtures.hpp"

using namespace apportion;
using fixtures::write_file;

namespace {

const char* kTopology = R"({
  "building": "B",
  "meters": {"cooling": "CHW", "heating": "HW"},
  "ahus": [{"id": "AH1"}],
  "vavs": [{"id": "V1", "ahu": "AH1"}],
  "rules": [
    {"pattern": "AH{n}.SAT", "equipment": "AH{n}", "role": "AhuSupplyAirTemp"},
    {"pattern": "AH{n}.OAD", "equipment": "AH{n}", "role": "EconomizerDamperPos"},
    {"pattern": "V{n}.OCC", "equipment": "V{n}", "role": "OccupiedCmd"},
    {"pattern": "V{n}.FLOW", "equipment": "V{n}", "role": "VavSupplyFlow"}
  ]
})";

struct Env {
  Topology topo = parse_topology(kTopology);
  std::vector<PointInfo> inv{{"AH1.SAT", "AH1.SAT", Unit::Fahrenheit},
                             {"AH1.OAD", "AH1.OAD", Unit::Percent},
                             {"V1.OCC", "V1.OCC", Unit::Boolean},
                             {"V1.FLOW", "V1.FLOW", Unit::Cfm}};
  PointBinding binding = bind_points(topo.graph, inv, topo.rules);
  std::filesystem::path dir = fixtures::temp_dir("ingest");
};

}  // namespace

TEST(ReadTrends, TwoPointsFourSamples) {
  Env env;
  write_file(env.dir / "t.csv",
             "timestamp,point,value\n"
             "2015-06-01T00:00:00-07:00,AH1.SAT,55.2\n"
             "2015-06-01T00:15:00-07:00,AH1.SAT,55.4\n"
             "2015-06-01T00:30:00-07:00,AH1.SAT,55.6\n"
             "2015-06-01T00:45:00-07:00,AH1.SAT,55.8\n"
             "2015-06-01T00:00:00-07:00,V1.FLOW,500\n"
             "2015-06-01T00:15:00-07:00,V1.FLOW,510\n"
             "2015-06-01T00:30:00-07:00,V1.FLOW,520\n"
             "2015-06-01T00:45:00-07:00,V1.FLOW,530\n");
  const auto t = read_trends(env.dir / "t.csv", env.binding);
  EXPECT_EQ(t.series.size(), 2u);
  const auto* sat = t.find("AH1", PointRole::AhuSupplyAirTemp);
  ASSERT_NE(sat, nullptr);
  EXPECT_EQ(sat->size(), 4u);
  EXPECT_EQ(sat->start(), parse_timestamp("2015-06-01T07:00:00Z"));
  EXPECT_DOUBLE_EQ(*(*sat)[3], 55.8);
  EXPECT_EQ(t.rows_read, 8u);
}

TEST(ReadTrends, PercentBecomesFractionAndBooleanIsBinary) {
  Env env;
  write_file(env.dir / "t.csv",
             "timestamp,point,value\n"
             "2015-06-01T00:00:00Z,AH1.OAD,75\n"
             "2015-06-01T00:00:00Z,V1.OCC,true\n"
             "2015-06-01T00:15:00Z,V1.OCC,0\n"
             "2015-06-01T00:30:00Z,V1.OCC,5\n");
  const auto t = read_trends(env.dir / "t.csv", env.binding);
  const auto* d = t.find("AH1", PointRole::EconomizerDamperPos);
  ASSERT_NE(d, nullptr);
  EXPECT_DOUBLE_EQ(*(*d)[0], 0.75);
  EXPECT_EQ(d->unit(), Unit::Fraction);
  const auto* occ = t.find("V1", PointRole::OccupiedCmd);
  ASSERT_NE(occ, nullptr);
  EXPECT_EQ(*(*occ)[0], 1.0);
  EXPECT_EQ(*(*occ)[1], 0.0);
  EXPECT_EQ(*(*occ)[2], 1.0);
}

TEST(ReadTrends, DuplicateRowsKeepTheLast) {
  Env env;
  write_file(env.dir / "t.csv",
             "timestamp,point,value\n"
             "2015-06-01T00:00:00Z,AH1.SAT,1\n"
             "2015-06-01T00:00:00Z,AH1.SAT,2\n");
  const auto t = read_trends(env.dir / "t.csv", env.binding);
  const auto* s = t.find("AH1", PointRole::AhuSupplyAirTemp);
  ASSERT_EQ(s->size(), 1u);
  EXPECT_EQ(*(*s)[0], 2.0);
}

TEST(ReadTrends, StrictNamesTheLineLenientCounts) {
  Env env;
  write_file(env.dir / "t.csv",
             "timestamp,point,value\n"
             "2015-06-01T00:00:00Z,AH1.SAT,55\n"
             "2015-06-01T00:15:00Z,AH1.SAT,abc\n"
             "yesterday,AH1.SAT,55\n"
             "2015-06-01T00:30:00Z,AH1.SAT,56\n");
  try {
    read_trends(env.dir / "t.csv", env.binding, {Seconds{900}, true});
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  const auto t = read_trends(env.dir / "t.csv", env.binding, {Seconds{900}, false});
  EXPECT_EQ(t.rows_skipped, 2u);
  EXPECT_EQ(t.find("AH1", PointRole::AhuSupplyAirTemp)->valid_count(), 2u);
}

TEST(ReadTrends, UnboundPointsAreCountedAndIgnored) {
  Env env;
  write_file(env.dir / "t.csv",
             "timestamp,point,value\n"
             "2015-06-01T00:00:00Z,AH1.SAT,55\n"
             "2015-06-01T00:00:00Z,CHILLER.KW,300\n"
             "2015-06-01T00:15:00Z,CHILLER.KW,310\n");
  const auto t = read_trends(env.dir / "t.csv", env.binding);
  EXPECT_EQ(t.series.size(), 1u);
  EXPECT_EQ(t.rows_ignored, 2u);
  EXPECT_EQ(t.points_ignored, 1u);
}

TEST(ReadTrends, EmptyValueIsAGapAndMissingFileIsIoError) {
  Env env;
  write_file(env.dir / "t.csv",
             "timestamp,point,value\n"
             "2015-06-01T00:00:00Z,AH1.SAT,55\n"
             "2015-06-01T00:15:00Z,AH1.SAT,\n"
             "2015-06-01T00:30:00Z,AH1.SAT,57\n");
  const auto t = read_trends(env.dir / "t.csv", env.binding);
  const auto* s = t.find("AH1", PointRole::AhuSupplyAirTemp);
  ASSERT_EQ(s->size(), 3u);
  EXPECT_FALSE((*s)[1]);
  EXPECT_THROW(read_trends(env.dir / "missing.csv", env.binding), IoError);
  write_file(env.dir / "bad.csv", "time,point,value\n");
  EXPECT_THROW(read_trends(env.dir / "bad.csv", env.binding), IoError);
}

TEST(ReadTrends, WriteReadRoundTrip) {
  Env env;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(40, 90);
  std::vector<Sample> v;
  for (int i = 0; i < 500; ++i) v.push_back(i % 37 == 5 ? Sample{} : Sample{u(rng)});
  const TimeSeries s("AH1.SAT", parse_timestamp("2015-06-01T07:00:00Z"), Seconds{900}, v, Unit::Fahrenheit);
  for (int offset : {0, -420, 330}) {
    std::ostringstream out;
    write_trends(out, std::span<const TimeSeries>(&s, 1), offset);
    write_file(env.dir / "rt.csv", out.str());
    const auto t = read_trends(env.dir / "rt.csv", env.binding);
    EXPECT_EQ(*t.find("AH1", PointRole::AhuSupplyAirTemp), s);
  }
}

TEST(ReadTrends, OrderInsensitive) {
  Env env;
  std::vector<std::string> rows;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 1000);
  const auto t0 = parse_timestamp("2015-06-01T00:00:00Z");
  for (int i = 0; i < 300; ++i) {
    const auto ts = format_timestamp(t0 + i * Seconds{300});
    rows.push_back(ts + ",AH1.SAT," + format_double(u(rng)));
    rows.push_back(ts + ",V1.FLOW," + format_double(u(rng)));
  }
  const auto write = [&](const std::vector<std::string>& rs) {
    std::string text = "timestamp,point,value\n";
    for (const auto& r : rs) text += r + "\n";
    write_file(env.dir / "o.csv", text);
    return read_trends(env.dir / "o.csv", env.binding);
  };
  const auto ref = write(rows);
  for (int k = 0; k < 3; ++k) {
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto t = write(rows);
    EXPECT_EQ(t.series, ref.series);
  }
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(55.2), "55.2");
  EXPECT_EQ(format_double(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_double(-3), "-3");
}
