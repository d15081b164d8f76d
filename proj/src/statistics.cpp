#include "apportion/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "apportion/error.hpp"

namespace apportion {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, const char* what,
                std::size_t min_len = 1) {
  if (a.size() != b.size()) {
    throw Error(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + ")");
  }
  if (a.size() < min_len) throw Error(std::string(what) + ": empty input");
}

// Ratios (a_i - b_i) / b_i over rows where |b_i| >= epsilon.
std::vector<double> relative_errors(std::span<const double> a, std::span<const double> b,
                                    const PercentErrorOptions& options, const char* what) {
  check_pair(a, b, what);
  std::vector<double> ratios;
  ratios.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(b[i]) < options.epsilon) continue;
    ratios.push_back((a[i] - b[i]) / b[i]);
  }
  const double excluded =
      1.0 - static_cast<double>(ratios.size()) / static_cast<double>(a.size());
  if (ratios.empty() || excluded > options.max_excluded_fraction) {
    throw Error(std::string(what) + ": reference degenerate");
  }
  return ratios;
}

}  // namespace

PercentErrorOptions percent_error_options(Unit unit) {
  switch (unit) {
    case Unit::Cfm: return {1.0, 0.5};
    case Unit::Fahrenheit: return {0.5, 0.5};
    default: return {1e-12, 0.5};
  }
}

double mean(std::span<const double> v) {
  if (v.empty()) throw Error("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double rmse(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

double rmspe(std::span<const double> measured, std::span<const double> reference,
             PercentErrorOptions options) {
  const auto ratios = relative_errors(measured, reference, options, "rmspe");
  double s = 0.0;
  for (double r : ratios) s += r * r;
  return 100.0 * std::sqrt(s / static_cast<double>(ratios.size()));
}

double mpe(std::span<const double> a, std::span<const double> b, PercentErrorOptions options) {
  const auto ratios = relative_errors(a, b, options, "mpe");
  return 100.0 * mean(ratios);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b, "pearson", 2);
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  // Relative test so that values carrying only rounding noise count as constant.
  const auto flat = [](double ss, double m, std::size_t n) {
    return ss <= 1e-24 * static_cast<double>(n) * (1.0 + m * m);
  };
  if (flat(saa, ma, a.size()) || flat(sbb, mb, b.size())) throw Error("pearson: constant series");
  const double r = sab / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace apportion
