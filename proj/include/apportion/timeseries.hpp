#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apportion/time.hpp"

namespace apportion {

enum class Unit { Fahrenheit, Cfm, Percent, Fraction, MmbtuPerHour, Boolean };

std::string_view to_string(Unit unit);

/// Accepts the canonical names produced by to_string plus common BMS aliases
/// ("degF", "°F", "%", "cfm", "bool", ...). Throws Error on unknown units.
Unit parse_unit(std::string_view text);

/// A sample is either a value or an explicit gap marker.
using Sample = std::optional<double>;

/// Uniformly spaced samples for one point: sample k sits at start + k * interval.
/// Immutable after construction.
class TimeSeries {
 public:
  TimeSeries(std::string point_id, Timestamp start, Seconds interval,
             std::vector<Sample> values, Unit unit);

  const std::string& point_id() const { return point_id_; }
  Timestamp start() const { return start_; }
  Seconds interval() const { return interval_; }
  Unit unit() const { return unit_; }
  const std::vector<Sample>& values() const { return values_; }

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  Timestamp time_at(std::size_t i) const {
    return start_ + static_cast<long>(i) * interval_;
  }
  /// One interval past the last sample.
  Timestamp end() const { return time_at(values_.size()); }
  const Sample& operator[](std::size_t i) const { return values_[i]; }

  std::size_t valid_count() const;
  /// Fraction of non-gap samples; 0 for an empty series.
  double coverage() const;

  bool operator==(const TimeSeries&) const = default;

 private:
  std::string point_id_;
  Timestamp start_;
  Seconds interval_;
  std::vector<Sample> values_;
  Unit unit_;
};

struct ResamplePolicy {
  enum class Kind { Mean, Last, Linear };

  Kind kind = Kind::Mean;
  /// Linear only: neighbouring valid samples further apart than this leave a gap.
  Seconds max_gap{0};

  static ResamplePolicy mean() { return {Kind::Mean, Seconds{0}}; }
  static ResamplePolicy last() { return {Kind::Last, Seconds{0}}; }
  static ResamplePolicy linear(Seconds max_gap) { return {Kind::Linear, max_gap}; }
};

struct TimedSample {
  Timestamp time;
  Sample value;
};

/// Places time-ordered irregular samples on a grid aligned to whole multiples of
/// `interval` since the Unix epoch.
///
/// Mean and Last aggregate each bin [t, t + interval); a bin without a valid
/// sample is a gap, and explicit gap markers extend the covered range without
/// contributing a value. Linear evaluates grid points between the first and the
/// last sample, interpolating only across neighbours at most `max_gap` apart.
TimeSeries bin_samples(std::string point_id, Unit unit,
                       std::span<const TimedSample> samples, Seconds interval,
                       ResamplePolicy policy);

/// Re-grids a series. Mean and Last only downsample (target >= native interval).
TimeSeries resample(const TimeSeries& series, Seconds target_interval,
                    ResamplePolicy policy);

/// Equal-length columns on one shared grid. Columns may contain gaps; consumers
/// that need complete rows select them with complete_rows().
class AlignedFrame {
 public:
  AlignedFrame() = default;
  AlignedFrame(Timestamp start, Seconds interval, std::size_t rows);

  Timestamp start() const { return start_; }
  Seconds interval() const { return interval_; }
  std::size_t rows() const { return rows_; }
  Timestamp time_at(std::size_t i) const {
    return start_ + static_cast<long>(i) * interval_;
  }
  Timestamp end() const { return time_at(rows_); }

  bool has_column(std::string_view name) const;
  /// Throws Error for an unknown column.
  const std::vector<Sample>& column(std::string_view name) const;
  const std::vector<Sample>* find(std::string_view name) const;
  std::vector<std::string> column_names() const;

  /// Adds or replaces a column; its length must equal rows().
  void set_column(std::string name, std::vector<Sample> values);

  /// Rows where every named column holds a value, optionally limited to a window.
  std::vector<std::size_t> complete_rows(std::span<const std::string> names,
                                         std::optional<Window> window = {}) const;
  /// Values of a column at the given rows; each row must be valid.
  std::vector<double> gather(std::string_view name,
                             std::span<const std::size_t> rows) const;

  /// Row range [first, last) covered by a window, clipped to the frame.
  std::pair<std::size_t, std::size_t> row_range(Window window) const;

 private:
  Timestamp start_{};
  Seconds interval_{1};
  std::size_t rows_ = 0;
  std::map<std::string, std::vector<Sample>, std::less<>> columns_;
};

struct NamedSeries {
  std::string name;
  const TimeSeries* series;
};

/// Intersects the series on their common grid. All inputs must share an interval
/// and grid phase. Throws Error("no temporal overlap") on disjoint ranges.
AlignedFrame align(std::span<const NamedSeries> series);
/// Convenience overload naming each column by its point id.
AlignedFrame align(std::span<const TimeSeries> series);

}  // namespace apportion
