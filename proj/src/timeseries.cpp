#include "apportion/timeseries.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "apportion/error.hpp"

namespace apportion {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Floor division for possibly negative epoch offsets.
long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long ceil_div(long a, long b) { return -floor_div(-a, b); }

}  // namespace

std::string_view to_string(Unit unit) {
  switch (unit) {
    case Unit::Fahrenheit: return "degF";
    case Unit::Cfm: return "cfm";
    case Unit::Percent: return "percent";
    case Unit::Fraction: return "fraction";
    case Unit::MmbtuPerHour: return "MMBTU/hr";
    case Unit::Boolean: return "bool";
  }
  return "?";
}

Unit parse_unit(std::string_view text) {
  const std::string u = lower(text);
  if (u == "degf" || u == "f" || u == "\xc2\xb0""f" || u == "fahrenheit") return Unit::Fahrenheit;
  if (u == "cfm") return Unit::Cfm;
  if (u == "%" || u == "percent" || u == "pct") return Unit::Percent;
  if (u == "fraction" || u == "ratio") return Unit::Fraction;
  if (u == "mmbtu/hr" || u == "mmbtu/h" || u == "mmbtuh") return Unit::MmbtuPerHour;
  if (u == "bool" || u == "boolean" || u == "binary") return Unit::Boolean;
  throw Error("unknown unit '" + std::string(text) + "'");
}

TimeSeries::TimeSeries(std::string point_id, Timestamp start, Seconds interval,
                       std::vector<Sample> values, Unit unit)
    : point_id_(std::move(point_id)),
      start_(start),
      interval_(interval),
      values_(std::move(values)),
      unit_(unit) {
  if (interval_.count() <= 0) {
    throw Error("series '" + point_id_ + "': interval must be positive");
  }
}

std::size_t TimeSeries::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](const Sample& s) { return s.has_value(); }));
}

double TimeSeries::coverage() const {
  if (values_.empty()) return 0.0;
  return static_cast<double>(valid_count()) / static_cast<double>(values_.size());
}

TimeSeries bin_samples(std::string point_id, Unit unit,
                       std::span<const TimedSample> samples, Seconds interval,
                       ResamplePolicy policy) {
  if (interval.count() <= 0) throw Error("resample: non-positive interval");
  if (samples.empty()) throw Error("resample: empty series '" + point_id + "'");
  if (!std::is_sorted(samples.begin(), samples.end(),
                      [](const TimedSample& a, const TimedSample& b) { return a.time < b.time; })) {
    throw Error("resample: samples of '" + point_id + "' are not time-ordered");
  }

  const long step = interval.count();
  const long first = samples.front().time.time_since_epoch().count();
  const long last = samples.back().time.time_since_epoch().count();

  if (policy.kind == ResamplePolicy::Kind::Linear) {
    const long k0 = ceil_div(first, step);
    const long k1 = floor_div(last, step);
    const Timestamp start{Seconds{k0 * step}};
    std::vector<Sample> out;
    if (k1 >= k0) out.resize(static_cast<std::size_t>(k1 - k0 + 1));

    // Walk valid samples only; explicit gaps just leave holes between them.
    std::vector<TimedSample> valid;
    valid.reserve(samples.size());
    for (const auto& s : samples) {
      if (s.value) valid.push_back(s);
    }
    std::size_t j = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Timestamp t = start + static_cast<long>(i) * interval;
      while (j + 1 < valid.size() && valid[j + 1].time <= t) ++j;
      if (valid.empty() || valid[j].time > t) continue;
      if (valid[j].time == t) {
        out[i] = valid[j].value;
        continue;
      }
      if (j + 1 >= valid.size()) continue;
      const auto& a = valid[j];
      const auto& b = valid[j + 1];
      if (b.time - a.time > policy.max_gap) continue;
      const double w = static_cast<double>((t - a.time).count()) /
                       static_cast<double>((b.time - a.time).count());
      out[i] = *a.value + w * (*b.value - *a.value);
    }
    return TimeSeries(std::move(point_id), start, interval, std::move(out), unit);
  }

  const long k0 = floor_div(first, step);
  const long k1 = floor_div(last, step);
  const Timestamp start{Seconds{k0 * step}};
  const auto bins = static_cast<std::size_t>(k1 - k0 + 1);
  std::vector<double> sum(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  std::vector<Sample> out(bins);

  for (const auto& s : samples) {
    if (!s.value) continue;
    const auto b = static_cast<std::size_t>(
        floor_div(s.time.time_since_epoch().count(), step) - k0);
    if (policy.kind == ResamplePolicy::Kind::Last) {
      out[b] = s.value;
    } else {
      sum[b] += *s.value;
      ++count[b];
    }
  }
  if (policy.kind == ResamplePolicy::Kind::Mean) {
    for (std::size_t b = 0; b < bins; ++b) {
      if (count[b] > 0) out[b] = sum[b] / static_cast<double>(count[b]);
    }
  }
  return TimeSeries(std::move(point_id), start, interval, std::move(out), unit);
}

TimeSeries resample(const TimeSeries& series, Seconds target_interval,
                    ResamplePolicy policy) {
  if (target_interval.count() <= 0) throw Error("resample: non-positive interval");
  if (series.empty()) throw Error("resample: empty series '" + series.point_id() + "'");
  if (policy.kind != ResamplePolicy::Kind::Linear && target_interval < series.interval()) {
    throw Error("resample: policy does not support upsampling '" + series.point_id() + "'");
  }
  std::vector<TimedSample> samples;
  samples.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    samples.push_back({series.time_at(i), series[i]});
  }
  return bin_samples(series.point_id(), series.unit(), samples, target_interval, policy);
}

AlignedFrame::AlignedFrame(Timestamp start, Seconds interval, std::size_t rows)
    : start_(start), interval_(interval), rows_(rows) {
  if (interval_.count() <= 0) throw Error("aligned frame: non-positive interval");
}

bool AlignedFrame::has_column(std::string_view name) const {
  return columns_.find(name) != columns_.end();
}

const std::vector<Sample>& AlignedFrame::column(std::string_view name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw Error("aligned frame: no column '" + std::string(name) + "'");
  return it->second;
}

const std::vector<Sample>* AlignedFrame::find(std::string_view name) const {
  auto it = columns_.find(name);
  return it == columns_.end() ? nullptr : &it->second;
}

std::vector<std::string> AlignedFrame::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& [name, _] : columns_) names.push_back(name);
  return names;
}

void AlignedFrame::set_column(std::string name, std::vector<Sample> values) {
  if (values.size() != rows_) {
    throw Error("aligned frame: column '" + name + "' has " + std::to_string(values.size()) +
                " rows, expected " + std::to_string(rows_));
  }
  columns_.insert_or_assign(std::move(name), std::move(values));
}

std::pair<std::size_t, std::size_t> AlignedFrame::row_range(Window window) const {
  const long step = interval_.count();
  const long lo = ceil_div((window.begin - start_).count(), step);
  const long hi = ceil_div((window.end - start_).count(), step);
  const auto clip = [this](long v) {
    return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(rows_)));
  };
  const std::size_t first = clip(lo);
  return {first, std::max(first, clip(hi))};
}

std::vector<std::size_t> AlignedFrame::complete_rows(std::span<const std::string> names,
                                                     std::optional<Window> window) const {
  std::vector<const std::vector<Sample>*> cols;
  cols.reserve(names.size());
  for (const auto& n : names) cols.push_back(&column(n));
  auto [first, last] = window ? row_range(*window) : std::pair<std::size_t, std::size_t>{0, rows_};
  std::vector<std::size_t> out;
  for (std::size_t r = first; r < last; ++r) {
    bool ok = true;
    for (const auto* c : cols) {
      if (!(*c)[r]) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(r);
  }
  return out;
}

std::vector<double> AlignedFrame::gather(std::string_view name,
                                         std::span<const std::size_t> rows) const {
  const auto& col = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto r : rows) {
    if (!col[r]) throw Error("aligned frame: gap in column '" + std::string(name) + "'");
    out.push_back(*col[r]);
  }
  return out;
}

AlignedFrame align(std::span<const NamedSeries> series) {
  if (series.empty()) throw Error("align: no series");
  const Seconds interval = series.front().series->interval();
  const long step = interval.count();
  const long phase = ((series.front().series->start().time_since_epoch().count() % step) + step) % step;
  Timestamp begin = series.front().series->start();
  Timestamp end = series.front().series->end();
  for (const auto& s : series) {
    if (s.series->interval() != interval) {
      throw Error("align: series '" + s.name + "' has interval " +
                  std::to_string(s.series->interval().count()) + "s, expected " +
                  std::to_string(step) + "s (resample first)");
    }
    const long p = ((s.series->start().time_since_epoch().count() % step) + step) % step;
    if (p != phase) throw Error("align: series '" + s.name + "' is off the shared grid");
    begin = std::max(begin, s.series->start());
    end = std::min(end, s.series->end());
  }
  if (end <= begin) throw Error("no temporal overlap");

  const auto rows = static_cast<std::size_t>((end - begin) / interval);
  AlignedFrame frame(begin, interval, rows);
  for (const auto& s : series) {
    if (frame.has_column(s.name)) throw Error("align: duplicate column '" + s.name + "'");
    const auto offset = static_cast<std::size_t>((begin - s.series->start()) / interval);
    const auto& v = s.series->values();
    frame.set_column(s.name, std::vector<Sample>(v.begin() + static_cast<long>(offset),
                                                 v.begin() + static_cast<long>(offset + rows)));
  }
  return frame;
}

AlignedFrame align(std::span<const TimeSeries> series) {
  std::vector<NamedSeries> named;
  named.reserve(series.size());
  for (const auto& s : series) named.push_back({s.point_id(), &s});
  return align(named);
}

}  // namespace apportion
