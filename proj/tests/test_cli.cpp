#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "apportion/commands.hpp"
#include "apportion/ingest.hpp"
#include "support/fixtures.hpp"

using namespace apportion;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::string_view cmd, const CommandOptions& opt) {
  std::ostringstream out, err;
  const int code = run_command(cmd, opt, out, err);
  return {code, out.str(), err.str()};
}

/// Small faulty bundle written once per test binary.
const fs::path& bundle_dir() {
  static const fs::path dir = [] {
    auto spec = fixtures::five_fault_spec();
    const auto d = fixtures::temp_dir("cli");
    synth::write_bundle(synth::generate(spec), d);
    return d;
  }();
  return dir;
}

fs::path copy_bundle(const std::string& name) {
  const auto d = fixtures::temp_dir(name);
  for (const auto& e : fs::directory_iterator(bundle_dir())) fs::copy_file(e.path(), d / e.path().filename());
  return d;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (auto p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

}  // namespace

TEST(Cli, FullPipelineProducesFiles) {
  const auto dir = copy_bundle("clipipe");
  CommandOptions opt{dir / "run.ini", std::nullopt, false, std::nullopt};
  auto r = run("validate", opt);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ok"), std::string::npos);
  r = run("fit", opt);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "model.json"));
  EXPECT_NE(r.out.find("train/test windows disjoint: yes"), std::string::npos);
  r = run("estimate", opt);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "equipment_power.csv"));
  EXPECT_TRUE(fs::exists(dir / "comparison_ahu_cooling.csv"));
  r = run("detect", opt);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto findings = parse_findings(fixtures::read_file(dir / "findings.csv"));
  EXPECT_EQ(findings.size(), 5u);
  r = run("report", opt);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "report.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  const auto text = fixtures::read_file(dir / "report.txt");
  EXPECT_NE(text.find("Energy Loss (MMBTU/year)"), std::string::npos);
}

TEST(Cli, EstimateOutputIsReadableTrendData) {
  const auto dir = copy_bundle("cliest");
  CommandOptions opt{dir / "run.ini", dir / "out", false, std::nullopt};
  ASSERT_EQ(run("fit", opt).code, 0);
  ASSERT_EQ(run("estimate", opt).code, 0);
  // Every row of the equipment power file parses as a trend row.
  const auto text = fixtures::read_file(dir / "out" / "equipment_power.csv");
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "timestamp,point,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    ASSERT_NE(a, b);
    EXPECT_NO_THROW(parse_timestamp(line.substr(0, a)));
    if (b + 1 < line.size()) EXPECT_NO_THROW(std::stod(line.substr(b + 1)));
    ++rows;
  }
  EXPECT_GT(rows, 0u);
  EXPECT_FALSE(fs::exists(dir / "equipment_power.csv"));
}

TEST(Cli, MissingMeterIsValidationError) {
  const auto dir = copy_bundle("climeter");
  const auto topo = fixtures::read_file(dir / "topology.json");
  fixtures::write_file(dir / "topology.json", replace_all(topo, "\"cooling\": \"SYN.CHW.POWER\",", ""));
  const auto r = run("validate", {dir / "run.ini", std::nullopt, false, std::nullopt});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BuildingCoolingPower"), std::string::npos) << r.err;
}

TEST(Cli, UnitMismatchIsValidationError) {
  const auto dir = copy_bundle("cliunit");
  auto pts = fixtures::read_file(dir / "points.csv");
  pts = replace_all(pts, "SYN.VAV1-01.FLOW,SYN.VAV1-01.FLOW,cfm", "SYN.VAV1-01.FLOW,SYN.VAV1-01.FLOW,degF");
  fixtures::write_file(dir / "points.csv", pts);
  const auto r = run("validate", {dir / "run.ini", std::nullopt, false, std::nullopt});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unit mismatch"), std::string::npos) << r.err;
}

TEST(Cli, DisjointTimeRangesAreValidationError) {
  const auto dir = copy_bundle("clitime");
  auto w = fixtures::read_file(dir / "weather.csv");
  w = replace_all(w, "2015-", "2016-");
  fixtures::write_file(dir / "weather.csv", w);
  const auto r = run("validate", {dir / "run.ini", std::nullopt, false, std::nullopt});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("no temporal overlap"), std::string::npos) << r.err;
}

TEST(Cli, MissingFilesAreIoErrors) {
  const auto dir = copy_bundle("cliio");
  EXPECT_EQ(run("validate", {dir / "nope.ini", std::nullopt, false, std::nullopt}).code, 2);
  fs::remove(dir / "trends.csv");
  EXPECT_EQ(run("validate", {dir / "run.ini", std::nullopt, false, std::nullopt}).code, 2);
  EXPECT_EQ(run("report", {dir / "run.ini", std::nullopt, false, std::nullopt}).code, 2);
  EXPECT_EQ(run("frobnicate", {dir / "run.ini", std::nullopt, false, std::nullopt}).code, 1);
}

TEST(Cli, SynthWritesBundleAndHonoursSeed) {
  const auto dir = fixtures::temp_dir("clisynth");
  fixtures::write_file(dir / "s.ini", "[scenario]\nseed = 1\nn_ahus = 1\nn_vavs_per_ahu = 2\nduration_days = 2\n");
  EXPECT_EQ(run("synth", {dir / "s.ini", std::nullopt, false, std::nullopt}).code, 1);
  ASSERT_EQ(run("synth", {dir / "s.ini", dir / "a", false, std::nullopt}).code, 0);
  ASSERT_EQ(run("synth", {dir / "s.ini", dir / "b", false, 1}).code, 0);
  ASSERT_EQ(run("synth", {dir / "s.ini", dir / "c", false, 2}).code, 0);
  for (const char* f : {"topology.json", "points.csv", "trends.csv", "weather.csv", "reference_year.csv",
                        "ground_truth.json", "ground_truth_power.csv", "run.ini"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  EXPECT_EQ(fixtures::read_file(dir / "a" / "trends.csv"), fixtures::read_file(dir / "b" / "trends.csv"));
  EXPECT_NE(fixtures::read_file(dir / "a" / "trends.csv"), fixtures::read_file(dir / "c" / "trends.csv"));
  fixtures::write_file(dir / "bad.ini", "[scenario]\nn_ahus = 0\n");
  EXPECT_EQ(run("synth", {dir / "bad.ini", dir / "d", false, std::nullopt}).code, 1);
}

TEST(Cli, ExecutableExitCodes) {
  const auto dir = copy_bundle("cliexe");
  const std::string exe = APPORTION_CLI_PATH;
  const auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status(exe + " validate --config " + (dir / "run.ini").string()), 0);
  EXPECT_EQ(status(exe + " validate --config " + (dir / "missing.ini").string()), 2);
  EXPECT_EQ(status(exe + " validate"), 1);
  EXPECT_EQ(status(exe + " --config " + (dir / "run.ini").string()), 1);
}
