#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "apportion/building_model.hpp"
#include "apportion/timeseries.hpp"

namespace apportion {

struct IngestOptions {
  Seconds interval{900};
  /// Strict mode fails on the first unparseable row; lenient mode skips and counts.
  bool strict = true;
};

/// Bound trend data, one grid-aligned series per (equipment, role).
struct TrendSet {
  std::map<BindingKey, TimeSeries> series;
  std::size_t rows_read = 0;
  std::size_t rows_skipped = 0;
  /// Rows whose point is not in the binding, and how many distinct such points.
  std::size_t rows_ignored = 0;
  std::size_t points_ignored = 0;

  const TimeSeries* find(std::string_view equipment, PointRole role) const;
};

/// Reads long-format trend CSV files (`timestamp,point,value`) and returns one
/// series per bound point on the `options.interval` grid (mean per bin, last
/// value for boolean points). Percent commands become fractions and boolean
/// points become {0,1}. Duplicate (timestamp, point) rows keep the value read
/// last. An empty value field is an explicit gap.
TrendSet read_trends(std::span<const std::filesystem::path> paths, const PointBinding& binding,
                     const IngestOptions& options = {});
TrendSet read_trends(const std::filesystem::path& path, const PointBinding& binding,
                     const IngestOptions& options = {});

struct TrendRow {
  Timestamp time;
  std::string point;
  Sample value;
};

/// Parses trend rows from a stream. `source` names the stream in error messages.
std::vector<TrendRow> parse_trend_rows(std::istream& in, const std::string& source,
                                       bool strict, std::size_t* skipped = nullptr);

/// Groups rows by point id: time-ordered, duplicates collapsed to the last row.
std::map<std::string, std::vector<TimedSample>> group_rows(std::vector<TrendRow> rows);

/// Writes series in the trend CSV format. Gaps are written as empty values, and
/// values use the shortest representation that reads back to the same double.
void write_trends(std::ostream& out, std::span<const TimeSeries> series,
                  int utc_offset_minutes = 0);
void write_trends_header(std::ostream& out);
void write_trend_row(std::ostream& out, Timestamp t, std::string_view point, Sample value,
                     int utc_offset_minutes = 0);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace apportion
