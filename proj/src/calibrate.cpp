#include "apportion/calibrate.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "apportion/error.hpp"
#include "apportion/statistics.hpp"

namespace apportion {

using nlohmann::json;

double LinearFit::predict(std::span<const double> x) const {
  double v = intercept;
  for (std::size_t j = 0; j < slopes.size(); ++j) v += slopes[j] * x[j];
  return v;
}

LinearFit fit_linear(std::span<const std::vector<double>> columns,
                     std::span<const std::string> names, std::span<const double> y) {
  const std::size_t n = y.size();
  const std::size_t p = columns.size();
  if (names.size() != p) throw Error("fit_linear: names do not match columns");
  for (std::size_t j = 0; j < p; ++j) {
    if (columns[j].size() != n) throw Error("fit_linear: column '" + names[j] + "' length mismatch");
  }
  if (n < p + 2) {
    throw Error("fit_linear: " + std::to_string(n) + " rows is too few for " + std::to_string(p) +
                " features");
  }
  LinearFit fit;
  const double my = mean(y);
  if (p == 0) {
    fit.intercept = my;
    return fit;
  }

  std::vector<double> mx(p), sx(p);
  std::vector<std::vector<double>> z(p, std::vector<double>(n));
  for (std::size_t j = 0; j < p; ++j) {
    mx[j] = mean(columns[j]);
    double ss = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = columns[j][i] - mx[j];
      ss += d * d;
      scale = std::max(scale, std::abs(columns[j][i]));
    }
    sx[j] = std::sqrt(ss);
    if (!(sx[j] > 1e-12 * scale * std::sqrt(static_cast<double>(n)))) {
      throw Error("fit_linear: column '" + names[j] + "' is constant (rank deficient)");
    }
    for (std::size_t i = 0; i < n; ++i) z[j][i] = (columns[j][i] - mx[j]) / sx[j];
  }

  // Scaled Gram matrix has unit diagonal; its Cholesky pivots measure how much
  // of each column is left after projecting out the earlier ones.
  std::vector<std::vector<double>> g(p, std::vector<double>(p)), l(p, std::vector<double>(p, 0.0));
  std::vector<double> r(p, 0.0);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += z[a][i] * z[b][i];
      g[a][b] = g[b][a] = s;
    }
    for (std::size_t i = 0; i < n; ++i) r[a] += z[a][i] * (y[i] - my);
  }
  for (std::size_t j = 0; j < p; ++j) {
    double d = g[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
    if (!(d > 1e-10)) {
      throw Error("fit_linear: column '" + names[j] +
                  "' is collinear with earlier columns (rank deficient)");
    }
    l[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = g[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = s / l[j][j];
    }
  }
  std::vector<double> w(p), gamma(p);
  for (std::size_t i = 0; i < p; ++i) {
    double s = r[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * w[k];
    w[i] = s / l[i][i];
  }
  for (std::size_t i = p; i-- > 0;) {
    double s = w[i];
    for (std::size_t k = i + 1; k < p; ++k) s -= l[k][i] * gamma[k];
    gamma[i] = s / l[i][i];
  }

  fit.slopes.resize(p);
  fit.intercept = my;
  for (std::size_t j = 0; j < p; ++j) {
    fit.slopes[j] = gamma[j] / sx[j];
    fit.intercept -= fit.slopes[j] * mx[j];
  }
  return fit;
}

std::optional<double> FitDiagnostics::improvement_pct() const {
  if (!test_rmse || !test_baseline_rmse || *test_baseline_rmse == 0.0) return std::nullopt;
  return 100.0 * (1.0 - *test_rmse / *test_baseline_rmse);
}

std::string_view to_string(SubModelKind kind) {
  switch (kind) {
    case SubModelKind::VavCooling: return "vav_cooling";
    case SubModelKind::AhuCooling: return "ahu_cooling";
    case SubModelKind::Heating: return "heating";
  }
  return "?";
}

namespace {

SubModelKind parse_kind(std::string_view s) {
  if (s == "vav_cooling") return SubModelKind::VavCooling;
  if (s == "ahu_cooling") return SubModelKind::AhuCooling;
  if (s == "heating") return SubModelKind::Heating;
  throw Error("unknown sub-model '" + std::string(s) + "'");
}

std::vector<std::string> features_of(SubModelKind kind, const BuildingEstimate& est) {
  switch (kind) {
    case SubModelKind::VavCooling:
      return {std::string(col::kSumVavCooling), std::string(col::kSumEconomizer)};
    case SubModelKind::AhuCooling: return {std::string(col::kSumAhuCooling)};
    case SubModelKind::Heating:
      if (est.has_reheat()) return {std::string(col::kSumAhuHeating), std::string(col::kSumVavHeating)};
      return {std::string(col::kSumAhuHeating)};
  }
  return {};
}

std::string target_of(SubModelKind kind) {
  return std::string(kind == SubModelKind::Heating ? col::kMeasuredHeating : col::kMeasuredCooling);
}

std::vector<std::size_t> rows_for(SubModelKind kind, const std::vector<std::string>& features,
                                  const BuildingEstimate& est, std::optional<Window> w) {
  std::vector<std::string> names = features;
  names.push_back(target_of(kind));
  if (kind == SubModelKind::AhuCooling) names.emplace_back(col::kCoolingModeRow);
  auto rows = est.frame.complete_rows(names, w);
  if (kind == SubModelKind::AhuCooling) {
    const auto& mode = est.frame.column(col::kCoolingModeRow);
    std::erase_if(rows, [&](std::size_t i) { return *mode[i] != 1.0; });
  }
  return rows;
}

SubModel fit_sub_model(SubModelKind kind, const BuildingEstimate& est, Window window) {
  SubModel m{kind, features_of(kind, est), {}, {}};
  const auto rows = rows_for(kind, m.features, est, window);
  if (rows.size() < kMinFitRows) {
    throw Error(std::string(to_string(kind)) + ": insufficient samples (" +
                std::to_string(rows.size()) + " rows, need " + std::to_string(kMinFitRows) + ")");
  }
  std::vector<std::vector<double>> x;
  for (const auto& f : m.features) x.push_back(est.frame.gather(f, rows));
  const auto y = est.frame.gather(target_of(kind), rows);
  try {
    m.fit = fit_linear(x, m.features, y);
  } catch (const Error& e) {
    throw Error(std::string(to_string(kind)) + ": " + e.what());
  }
  const auto yhat = predict(m, est, rows);
  m.diagnostics.train_rows = rows.size();
  m.diagnostics.baseline_mean = mean(y);
  m.diagnostics.train_rmse = rmse(y, yhat);
  m.diagnostics.train_baseline_rmse =
      rmse(y, std::vector<double>(y.size(), m.diagnostics.baseline_mean));
  return m;
}

}  // namespace

std::vector<std::size_t> vav_cooling_rows(const BuildingEstimate& est, std::optional<Window> w) {
  return rows_for(SubModelKind::VavCooling, features_of(SubModelKind::VavCooling, est), est, w);
}
std::vector<std::size_t> ahu_cooling_rows(const BuildingEstimate& est, std::optional<Window> w) {
  return rows_for(SubModelKind::AhuCooling, features_of(SubModelKind::AhuCooling, est), est, w);
}
std::vector<std::size_t> heating_rows(const BuildingEstimate& est, std::optional<Window> w) {
  return rows_for(SubModelKind::Heating, features_of(SubModelKind::Heating, est), est, w);
}

SubModel fit_cooling_vav(const BuildingEstimate& est, Window window) {
  return fit_sub_model(SubModelKind::VavCooling, est, window);
}
SubModel fit_cooling_ahu(const BuildingEstimate& est, Window window) {
  return fit_sub_model(SubModelKind::AhuCooling, est, window);
}
SubModel fit_heating(const BuildingEstimate& est, Window window) {
  return fit_sub_model(SubModelKind::Heating, est, window);
}

std::vector<double> predict(const SubModel& m, const BuildingEstimate& est,
                            std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size(), m.fit.intercept);
  for (std::size_t j = 0; j < m.features.size(); ++j) {
    const auto x = est.frame.gather(m.features[j], rows);
    for (std::size_t i = 0; i < rows.size(); ++i) out[i] += m.fit.slopes[j] * x[i];
  }
  return out;
}

std::optional<double> CalibratedModel::c(int i) const {
  switch (i) {
    case 1: return vav_cooling ? std::optional(vav_cooling->fit.slopes[0]) : std::nullopt;
    case 2: return vav_cooling ? std::optional(vav_cooling->fit.slopes[1]) : std::nullopt;
    case 3: return vav_cooling ? std::optional(vav_cooling->fit.intercept) : std::nullopt;
    case 4: return ahu_cooling ? std::optional(ahu_cooling->fit.slopes[0]) : std::nullopt;
    case 5: return ahu_cooling ? std::optional(ahu_cooling->fit.intercept) : std::nullopt;
    case 6: return heating ? std::optional(heating->fit.slopes[0]) : std::nullopt;
    case 7:
      return heating && heating->fit.slopes.size() > 1 ? std::optional(heating->fit.slopes[1])
                                                       : std::nullopt;
    case 8: return heating ? std::optional(heating->fit.intercept) : std::nullopt;
    default: throw Error("coefficient index out of range: " + std::to_string(i));
  }
}

CalibratedModel calibrate(const BuildingEstimate& est, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train fraction must lie in (0, 1)");
  }
  const AlignedFrame& f = est.frame;
  const auto split = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(f.rows())));
  CalibratedModel model;
  model.constants = est.constants;
  model.train_window = {f.start(), f.time_at(split)};
  model.test_window = {f.time_at(split), f.end()};

  const auto attempt = [&](std::optional<SubModel>& slot, SubModel (*fn)(const BuildingEstimate&, Window)) {
    try {
      slot = fn(est, model.train_window);
    } catch (const Error& e) {
      model.warnings.push_back(e.what());
    }
  };
  attempt(model.vav_cooling, fit_cooling_vav);
  attempt(model.ahu_cooling, fit_cooling_ahu);
  attempt(model.heating, fit_heating);

  for (int i : {1, 4, 6, 7}) {
    if (auto v = model.c(i); v && *v < 0.0) {
      model.warnings.push_back("negative coefficient c" + std::to_string(i) + " = " +
                               std::to_string(*v));
    }
  }
  if (!model.test_window.empty()) evaluate(model, est, model.test_window);
  return model;
}

void evaluate(CalibratedModel& model, const BuildingEstimate& est, Window test_window) {
  if (test_window.empty()) throw Error("evaluate: empty test window");
  if (test_window.begin < model.train_window.end && model.train_window.begin < test_window.end) {
    throw Error("evaluate: test window overlaps the train window");
  }
  model.test_window = test_window;
  for (auto* slot : {&model.vav_cooling, &model.ahu_cooling, &model.heating}) {
    if (!*slot) continue;
    SubModel& m = **slot;
    const auto rows = rows_for(m.kind, m.features, est, test_window);
    m.diagnostics.test_rows = rows.size();
    if (rows.empty()) {
      m.diagnostics.test_rmse.reset();
      m.diagnostics.test_baseline_rmse.reset();
      continue;
    }
    const auto y = est.frame.gather(target_of(m.kind), rows);
    m.diagnostics.test_rmse = rmse(y, predict(m, est, rows));
    m.diagnostics.test_baseline_rmse =
        rmse(y, std::vector<double>(y.size(), m.diagnostics.baseline_mean));
  }
}

namespace {

double round12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

json opt(const std::optional<double>& v) { return v ? json(round12(*v)) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json window_json(const Window& w) {
  return {{"start", format_timestamp(w.begin)}, {"end", format_timestamp(w.end)}};
}

Window window_from(const json& j) {
  return {parse_timestamp(j.at("start").get<std::string>()),
          parse_timestamp(j.at("end").get<std::string>())};
}

}  // namespace

std::string model_to_json(const CalibratedModel& model) {
  json coeffs = json::object();
  for (int i = 1; i <= 8; ++i) coeffs["c" + std::to_string(i)] = opt(model.c(i));
  json subs = json::array();
  for (const auto* slot : {&model.vav_cooling, &model.ahu_cooling, &model.heating}) {
    if (!*slot) continue;
    const SubModel& m = **slot;
    json slopes = json::array();
    for (double s : m.fit.slopes) slopes.push_back(round12(s));
    const auto& d = m.diagnostics;
    subs.push_back({{"kind", to_string(m.kind)},
                    {"features", m.features},
                    {"slopes", slopes},
                    {"intercept", round12(m.fit.intercept)},
                    {"diagnostics",
                     {{"train_rows", d.train_rows},
                      {"test_rows", d.test_rows},
                      {"train_rmse", round12(d.train_rmse)},
                      {"train_baseline_rmse", round12(d.train_baseline_rmse)},
                      {"baseline_mean", round12(d.baseline_mean)},
                      {"test_rmse", opt(d.test_rmse)},
                      {"test_baseline_rmse", opt(d.test_baseline_rmse)},
                      {"improvement_pct", opt(d.improvement_pct())}}}});
  }
  json j = {{"format", "apportion-model"},
            {"version", 1},
            {"constants",
             {{"air_power_k", model.constants.air_power_k},
              {"deadband_f", model.constants.deadband_f}}},
            {"train_window", window_json(model.train_window)},
            {"test_window", window_json(model.test_window)},
            {"coefficients", coeffs},
            {"submodels", subs},
            {"warnings", model.warnings}};
  return j.dump(2) + "\n";
}

CalibratedModel model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "apportion-model") throw IoError("not a model file");
    CalibratedModel m;
    m.constants.air_power_k = j.at("constants").at("air_power_k").get<double>();
    m.constants.deadband_f = j.at("constants").at("deadband_f").get<double>();
    m.train_window = window_from(j.at("train_window"));
    m.test_window = window_from(j.at("test_window"));
    m.warnings = j.value("warnings", std::vector<std::string>{});
    for (const auto& s : j.at("submodels")) {
      SubModel sm{parse_kind(s.at("kind").get<std::string>()),
                  s.at("features").get<std::vector<std::string>>(),
                  {s.at("slopes").get<std::vector<double>>(), s.at("intercept").get<double>()},
                  {}};
      if (sm.fit.slopes.size() != sm.features.size()) throw IoError("slopes do not match features");
      const auto& d = s.at("diagnostics");
      sm.diagnostics.train_rows = d.at("train_rows").get<std::size_t>();
      sm.diagnostics.test_rows = d.at("test_rows").get<std::size_t>();
      sm.diagnostics.train_rmse = d.at("train_rmse").get<double>();
      sm.diagnostics.train_baseline_rmse = d.at("train_baseline_rmse").get<double>();
      sm.diagnostics.baseline_mean = d.at("baseline_mean").get<double>();
      sm.diagnostics.test_rmse = opt_from(d, "test_rmse");
      sm.diagnostics.test_baseline_rmse = opt_from(d, "test_baseline_rmse");
      switch (sm.kind) {
        case SubModelKind::VavCooling:
          if (sm.features.size() != 2) throw IoError("vav_cooling needs 2 features");
          m.vav_cooling = std::move(sm);
          break;
        case SubModelKind::AhuCooling:
          if (sm.features.size() != 1) throw IoError("ahu_cooling needs 1 feature");
          m.ahu_cooling = std::move(sm);
          break;
        case SubModelKind::Heating:
          if (sm.features.empty() || sm.features.size() > 2) throw IoError("heating needs 1 or 2 features");
          m.heating = std::move(sm);
          break;
      }
    }
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("model file: ") + e.what());
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
}

void write_model(const std::filesystem::path& path, const CalibratedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << model_to_json(model);
  if (!out) throw IoError("write failed: '" + path.string() + "'");
}

CalibratedModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return model_from_json(ss.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace apportion
