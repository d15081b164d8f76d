#include "apportion/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "apportion/building_estimate.hpp"
#include "apportion/calibrate.hpp"
#include "apportion/error.hpp"
#include "apportion/ingest.hpp"
#include "apportion/synth.hpp"

namespace apportion {

namespace {

struct Inputs {
  RunConfig cfg;
  Topology topo;
  PointBinding binding;
  TrendSet trends;
};

RunConfig config_of(const CommandOptions& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (opt.out) cfg.redirect_outputs(*opt.out);
  return cfg;
}

Inputs load_inputs(const CommandOptions& opt) {
  Inputs in;
  in.cfg = config_of(opt);
  in.topo = load_topology(in.cfg.topology);
  const auto inventory = read_point_inventory(in.cfg.points);
  in.binding = bind_points(in.topo.graph, inventory, in.topo.rules);
  require_model_inputs(in.topo.graph, in.binding);
  const auto files = in.cfg.trend_inputs();
  in.trends = read_trends(files, in.binding, {in.cfg.interval, opt.strict});
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IoError("cannot write '" + path.string() + "'");
  return o;
}

void close_output(std::ofstream& o, const std::filesystem::path& path) {
  o.close();
  if (!o) throw IoError("write failed: '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixed(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int decimals = 6) {
  return v ? fixed(*v, decimals) : "-";
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// Coverage below this share of the common span is reported by validate.
constexpr double kCoverageWarn = 0.9;

int validate_impl(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(opt);
  const auto& g = in.topo.graph;
  out << "topology: " << g.ahus.size() << " AHUs, " << g.vavs.size() << " VAVs, " << g.zone_count()
      << " zones\n";
  print_warnings(err, g.warnings);
  out << "binding: " << in.binding.bound.size() << " roles bound, " << in.binding.unmatched_points.size()
      << " points unmatched\n";
  std::map<std::string, std::size_t> by_fallback;
  for (const auto& u : in.binding.unresolved) ++by_fallback[std::string(to_string(u.fallback))];
  for (const auto& [name, count] : by_fallback) out << "  fallback " << name << ": " << count << " roles\n";
  out << "trends: " << in.trends.rows_read << " rows read, " << in.trends.rows_skipped << " skipped, "
      << in.trends.rows_ignored << " ignored (" << in.trends.points_ignored << " unbound points)\n";

  if (!in.trends.series.empty()) {
    Timestamp begin = Timestamp::max(), end = Timestamp::min();
    for (const auto& [key, s] : in.trends.series) {
      begin = std::min(begin, s.start());
      end = std::max(end, s.end());
    }
    const double span = static_cast<double>((end - begin) / in.cfg.interval);
    for (const auto& [key, s] : in.trends.series) {
      const double cov = span > 0 ? static_cast<double>(s.valid_count()) / span : 0.0;
      if (cov < kCoverageWarn) {
        err << "warning: coverage " << fixed(100.0 * cov, 1) << "% for point " << s.point_id() << " ("
            << to_string(key) << ")\n";
      }
    }
  }
  const BuildingEstimate est = estimate_building(g, in.binding, in.trends, in.cfg.constants);
  print_warnings(err, est.warnings);
  const int off = g.schedule.utc_offset_minutes;
  out << "frame: " << est.frame.rows() << " rows from " << format_timestamp(est.frame.start(), off) << " to "
      << format_timestamp(est.frame.end(), off) << '\n';
  out << "ok\n";
  return 0;
}

void print_diagnostics(std::ostream& out, const CalibratedModel& m, int off) {
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %10s %10s %12s %14s %12s %14s %13s\n", "submodel", "train_rows",
                "test_rows", "train_rmse", "train_baseline", "test_rmse", "test_baseline", "improvement_%");
  out << line;
  for (const auto* s : {&m.vav_cooling, &m.ahu_cooling, &m.heating}) {
    if (!*s) continue;
    const auto& d = (*s)->diagnostics;
    std::snprintf(line, sizeof line, "%-12s %10zu %10zu %12s %14s %12s %14s %13s\n",
                  std::string(to_string((*s)->kind)).c_str(), d.train_rows, d.test_rows,
                  fixed(d.train_rmse, 6).c_str(), fixed(d.train_baseline_rmse, 6).c_str(),
                  opt_fixed(d.test_rmse).c_str(), opt_fixed(d.test_baseline_rmse).c_str(),
                  opt_fixed(d.improvement_pct(), 2).c_str());
    out << line;
  }
  for (int i = 1; i <= 8; ++i) {
    const auto c = m.c(i);
    out << "c" << i << " = " << (c ? format_double(*c) : std::string("n/a")) << '\n';
  }
  out << "train window [" << format_timestamp(m.train_window.begin, off) << ", "
      << format_timestamp(m.train_window.end, off) << ")\n";
  out << "test window  [" << format_timestamp(m.test_window.begin, off) << ", "
      << format_timestamp(m.test_window.end, off) << ")\n";
  const bool disjoint = m.train_window.end <= m.test_window.begin || m.test_window.end <= m.train_window.begin;
  out << "train/test windows disjoint: " << (disjoint ? "yes" : "NO") << '\n';
}

int fit_impl(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(opt);
  const BuildingEstimate est = estimate_building(in.topo.graph, in.binding, in.trends, in.cfg.constants);
  print_warnings(err, est.warnings);
  const CalibratedModel model = calibrate(est, in.cfg.train_fraction);
  print_warnings(err, model.warnings);
  if (!model.complete() && !in.cfg.allow_partial) {
    throw Error("fit incomplete: a sub-model could not be fitted (set [fit] allow_partial = true to accept)");
  }
  if (!model.vav_cooling && !model.ahu_cooling && !model.heating) throw Error("fit failed: no sub-model fitted");
  auto mo = open_output(in.cfg.model);
  mo.close();
  write_model(in.cfg.model, model);
  print_diagnostics(out, model, in.topo.graph.schedule.utc_offset_minutes);
  out << "model written to " << in.cfg.model.string() << '\n';
  return 0;
}

void write_comparison(const std::filesystem::path& path, const SubModel& m, const BuildingEstimate& est,
                      std::span<const std::size_t> rows, std::string_view measured, int off) {
  const auto pred = predict(m, est, rows);
  const auto& meas = est.frame.column(measured);
  auto o = open_output(path);
  o << "timestamp,estimated,measured\n";
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& y = meas[rows[j]];
    o << format_timestamp(est.frame.time_at(rows[j]), off) << ',' << format_double(pred[j]) << ','
      << (y ? format_double(*y) : std::string()) << '\n';
  }
  close_output(o, path);
}

int estimate_impl(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(opt);
  const CalibratedModel model = read_model(in.cfg.model);
  const BuildingEstimate est = estimate_building(in.topo.graph, in.binding, in.trends, model.constants);
  print_warnings(err, est.warnings);
  const int off = in.topo.graph.schedule.utc_offset_minutes;

  std::vector<std::string> columns;
  for (const auto& ahu : est.ahus) {
    for (const auto& v : est.included_vavs.at(ahu)) {
      columns.push_back(col::derived(v, col::kCooling));
      columns.push_back(col::derived(v, col::kHeating));
    }
    columns.push_back(col::derived(ahu, col::kCooling));
    columns.push_back(col::derived(ahu, col::kHeating));
    columns.push_back(col::derived(ahu, col::kEconomizer));
  }
  for (auto c : {col::kSumVavCooling, col::kSumEconomizer, col::kSumAhuCooling, col::kSumAhuHeating,
                 col::kSumVavHeating}) {
    columns.emplace_back(c);
  }
  const auto power_path = in.cfg.output / "equipment_power.csv";
  auto o = open_output(power_path);
  write_trends_header(o);
  std::size_t written = 0;
  for (const auto& name : columns) {
    const auto* values = est.frame.find(name);
    if (!values) continue;
    ++written;
    for (std::size_t i = 0; i < values->size(); ++i) {
      write_trend_row(o, est.frame.time_at(i), name, (*values)[i], off);
    }
  }
  close_output(o, power_path);
  out << written << " power series written to " << power_path.string() << '\n';

  const auto compare = [&](const std::optional<SubModel>& m, const char* file, std::vector<std::size_t> rows,
                           std::string_view measured) {
    if (!m) return;
    const auto path = in.cfg.output / file;
    write_comparison(path, *m, est, rows, measured, off);
    out << "comparison written to " << path.string() << '\n';
  };
  compare(model.vav_cooling, "comparison_vav_cooling.csv", vav_cooling_rows(est), col::kMeasuredCooling);
  compare(model.ahu_cooling, "comparison_ahu_cooling.csv", ahu_cooling_rows(est), col::kMeasuredCooling);
  compare(model.heating, "comparison_heating.csv", heating_rows(est), col::kMeasuredHeating);
  return 0;
}

int detect_impl(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(opt);
  const BuildingEstimate est = estimate_building(in.topo.graph, in.binding, in.trends, in.cfg.constants);
  print_warnings(err, est.warnings);
  const Detection d = run_all(est, in.topo.graph, {est.frame.start(), est.frame.end()}, in.cfg.thresholds);
  print_warnings(err, d.warnings);
  const int off = in.topo.graph.schedule.utc_offset_minutes;

  auto o = open_output(in.cfg.findings);
  write_findings(o, d.findings, off);
  close_output(o, in.cfg.findings);

  const auto log_path = in.cfg.output / "inconclusive.csv";
  auto log = open_output(log_path);
  log << "rule,equipment,reason,windows\n";
  for (const auto& e : d.inconclusive) {
    log << rule_number(e.rule) << ',' << e.equipment << ",\"" << e.reason << "\"," << e.windows << '\n';
  }
  close_output(log, log_path);

  for (const auto& f : d.findings) {
    out << "rule " << rule_number(f.rule) << " (" << rule_label(f.rule) << ") on " << f.equipment << ": statistic "
        << fixed(f.statistic, 3) << " vs threshold " << fixed(f.threshold, 3) << ", "
        << fixed(static_cast<double>(f.persistence.count()) / 86400.0, 2) << " days\n";
  }
  out << d.findings.size() << " findings written to " << in.cfg.findings.string() << "; "
      << d.inconclusive.size() << " inconclusive entries in " << log_path.string() << '\n';
  return 0;
}

int report_impl(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  const Inputs in = load_inputs(opt);
  if (!in.cfg.reference_weather) throw Error("config: report needs [paths] reference_weather");
  const CalibratedModel model = read_model(in.cfg.model);
  auto findings = parse_findings(read_text(in.cfg.findings));
  const auto ref = read_reference_year(*in.cfg.reference_weather);
  const BuildingEstimate est = estimate_building(in.topo.graph, in.binding, in.trends, model.constants);
  print_warnings(err, est.warnings);

  std::sort(findings.begin(), findings.end(), [](const FaultFinding& a, const FaultFinding& b) {
    return std::tie(a.rule, a.equipment, a.window.begin, a.window.end) <
           std::tie(b.rule, b.equipment, b.window.begin, b.window.end);
  });
  std::vector<ImpactEstimate> impacts;
  for (const auto& f : findings) {
    impacts.push_back(assess(f, model, est, in.topo.graph, ref, in.cfg.thresholds.min_coverage));
  }
  impacts = prioritize(std::move(impacts));
  const int off = in.topo.graph.schedule.utc_offset_minutes;

  const auto csv_path = in.cfg.output / "report.csv";
  auto csv = open_output(csv_path);
  write_report_csv(csv, impacts, off);
  close_output(csv, csv_path);
  const auto summary_path = in.cfg.output / "summary.csv";
  auto summary = open_output(summary_path);
  write_summary_csv(summary, impacts);
  close_output(summary, summary_path);
  const auto text_path = in.cfg.output / "report.txt";
  auto text = open_output(text_path);
  write_report_text(text, impacts, off);
  close_output(text, text_path);
  write_report_text(out, impacts, off);
  return 0;
}

int synth_impl(const CommandOptions& opt, std::ostream& out, std::ostream&) {
  if (!opt.out) throw Error("synth: --out <dir> is required");
  synth::ScenarioSpec spec = synth::read_scenario(opt.config);
  if (opt.seed) spec.seed = *opt.seed;
  const auto bundle = synth::generate(spec);
  synth::write_bundle(bundle, *opt.out);
  out << "scenario: " << spec.n_ahus << " AHUs x " << spec.n_vavs_per_ahu << " VAVs, " << bundle.truth.rows
      << " rows, " << bundle.truth.faults.size() << " injected faults, seed " << spec.seed << '\n';
  out << "bundle written to " << opt.out->string() << '\n';
  return 0;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError("findings line " + std::to_string(line) + ": bad number '" + s + "'");
}

struct RuleSummary {
  std::size_t count = 0;
  std::size_t not_estimable = 0;
  double annual = 0.0;
};

std::map<RuleId, RuleSummary> summarize(std::span<const ImpactEstimate> impacts) {
  std::map<RuleId, RuleSummary> by_rule;
  for (auto r : kAllRules) by_rule[r];
  for (const auto& ie : impacts) {
    auto& s = by_rule[ie.finding.rule];
    ++s.count;
    if (ie.estimable()) {
      s.annual += ie.annual->annual;
    } else {
      ++s.not_estimable;
    }
  }
  return by_rule;
}

}  // namespace

void write_findings(std::ostream& out, std::span<const FaultFinding> findings, int off) {
  out << "rule,equipment,start,end,statistic,threshold\n";
  for (const auto& f : findings) {
    out << rule_number(f.rule) << ',' << f.equipment << ',' << format_timestamp(f.window.begin, off) << ','
        << format_timestamp(f.window.end, off) << ',' << format_double(f.statistic) << ','
        << format_double(f.threshold) << '\n';
  }
}

std::vector<FaultFinding> parse_findings(std::string_view csv_text) {
  std::istringstream in{std::string(csv_text)};
  std::string line;
  if (!std::getline(in, line)) throw IoError("findings: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "rule,equipment,start,end,statistic,threshold") throw IoError("findings: unexpected header '" + line + "'");
  std::vector<FaultFinding> out;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw IoError("findings line " + std::to_string(n) + ": expected 6 fields");
    FaultFinding ff;
    try {
      ff.rule = rule_from_number(static_cast<int>(parse_number(f[0], n)));
      ff.window = {parse_timestamp(f[2]), parse_timestamp(f[3])};
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      throw IoError("findings line " + std::to_string(n) + ": " + e.what());
    }
    ff.equipment = f[1];
    ff.statistic = parse_number(f[4], n);
    ff.threshold = parse_number(f[5], n);
    ff.persistence = ff.window.length();
    out.push_back(std::move(ff));
  }
  return out;
}

void write_report_csv(std::ostream& out, std::span<const ImpactEstimate> impacts, int off) {
  out << "rank,rule,possible_fault,equipment,start,end,method,window_loss_mmbtu,annual_mmbtu_per_year,note\n";
  std::size_t rank = 0;
  for (const auto& ie : impacts) {
    const auto& f = ie.finding;
    out << ++rank << ',' << rule_number(f.rule) << ',' << csv_field(std::string(rule_label(f.rule))) << ','
        << f.equipment << ',' << format_timestamp(f.window.begin, off) << ','
        << format_timestamp(f.window.end, off) << ',' << to_string(ie.loss.method) << ','
        << (ie.loss.loss ? format_double(*ie.loss.loss) : std::string()) << ','
        << (ie.estimable() ? format_double(ie.annual->annual) : std::string()) << ',' << csv_field(ie.note)
        << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const ImpactEstimate> impacts) {
  out << "rule,possible_fault,detected_faults,energy_loss_mmbtu_per_year,not_estimable\n";
  for (const auto& [rule, s] : summarize(impacts)) {
    out << rule_number(rule) << ',' << csv_field(std::string(rule_label(rule))) << ',' << s.count << ','
        << format_double(s.annual) << ',' << s.not_estimable << '\n';
  }
}

void write_report_text(std::ostream& out, std::span<const ImpactEstimate> impacts, int off) {
  char line[512];
  std::snprintf(line, sizeof line, "%-5s %-28s %15s %24s\n", "Rule", "Possible Fault", "Detected Faults",
                "Energy Loss (MMBTU/year)");
  out << line;
  for (const auto& [rule, s] : summarize(impacts)) {
    std::string loss = fixed(s.annual, 1);
    if (s.not_estimable) loss += " (" + std::to_string(s.not_estimable) + " not estimable)";
    std::snprintf(line, sizeof line, "%-5d %-28s %15zu %24s\n", rule_number(rule),
                  std::string(rule_label(rule)).c_str(), s.count, loss.c_str());
    out << line;
  }
  if (impacts.empty()) return;
  out << "\nPrioritized findings\n";
  std::snprintf(line, sizeof line, "%-4s %-5s %-12s %-25s %-25s %-14s %14s %14s\n", "#", "Rule", "Equipment",
                "Start", "End", "Method", "Window MMBTU", "MMBTU/year");
  out << line;
  std::size_t rank = 0;
  for (const auto& ie : impacts) {
    const auto& f = ie.finding;
    std::snprintf(line, sizeof line, "%-4zu %-5d %-12s %-25s %-25s %-14s %14s %14s\n", ++rank,
                  rule_number(f.rule), f.equipment.c_str(), format_timestamp(f.window.begin, off).c_str(),
                  format_timestamp(f.window.end, off).c_str(), std::string(to_string(ie.loss.method)).c_str(),
                  ie.loss.loss ? fixed(*ie.loss.loss, 3).c_str() : "-",
                  ie.estimable() ? fixed(ie.annual->annual, 1).c_str() : "not estimable");
    out << line;
    if (!ie.note.empty()) out << "     note: " << ie.note << '\n';
  }
}

#define APPORTION_COMMAND(name)                                                        \
  int cmd_##name(const CommandOptions& opt, std::ostream& out, std::ostream& err) {    \
    try {                                                                              \
      return name##_impl(opt, out, err);                                               \
    } catch (const IoError& e) {                                                       \
      err << "error: " << e.what() << '\n';                                            \
      return 2;                                                                        \
    } catch (const std::filesystem::filesystem_error& e) {                             \
      err << "error: " << e.what() << '\n';                                            \
      return 2;                                                                        \
    } catch (const std::exception& e) {                                                \
      err << "error: " << e.what() << '\n';                                            \
      return 1;                                                                        \
    }                                                                                  \
  }

APPORTION_COMMAND(validate)
APPORTION_COMMAND(fit)
APPORTION_COMMAND(estimate)
APPORTION_COMMAND(detect)
APPORTION_COMMAND(report)
APPORTION_COMMAND(synth)

#undef APPORTION_COMMAND

int run_command(std::string_view name, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  if (name == "validate") return cmd_validate(opt, out, err);
  if (name == "fit") return cmd_fit(opt, out, err);
  if (name == "estimate") return cmd_estimate(opt, out, err);
  if (name == "detect") return cmd_detect(opt, out, err);
  if (name == "report") return cmd_report(opt, out, err);
  if (name == "synth") return cmd_synth(opt, out, err);
  err << "error: unknown command '" << name << "'\n";
  return 1;
}

}  // namespace apportion
