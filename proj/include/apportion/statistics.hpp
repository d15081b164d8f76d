#pragma once

#include <span>

#include "apportion/timeseries.hpp"

namespace apportion {

/// Rows whose |reference| falls below `epsilon` are excluded from percentage
/// statistics; if more than `max_excluded_fraction` of rows are excluded the
/// reference is considered degenerate.
struct PercentErrorOptions {
  double epsilon = 1e-12;
  double max_excluded_fraction = 0.5;
};

/// Zero-reference guard per unit: 1 CFM for flows, 0.5 degF for temperatures.
PercentErrorOptions percent_error_options(Unit unit);

double rmse(std::span<const double> a, std::span<const double> b);

/// 100 * sqrt(mean(((measured - reference) / reference)^2)) over retained rows.
double rmspe(std::span<const double> measured, std::span<const double> reference,
             PercentErrorOptions options = {});

/// Signed mean percentage error 100 * mean((a - b) / b) over retained rows.
double mpe(std::span<const double> a, std::span<const double> b,
           PercentErrorOptions options = {});

/// Sample Pearson correlation. Throws Error("constant series") if either input
/// has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);

}  // namespace apportion
