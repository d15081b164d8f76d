#include "apportion/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <set>

#include "apportion/error.hpp"

namespace apportion {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Sample parse_value(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nan" || lower == "null") return std::nullopt;
  if (lower == "true" || lower == "on" || lower == "active") return 1.0;
  if (lower == "false" || lower == "off" || lower == "inactive") return 0.0;
  double v = 0.0;
  const char* first = text.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error("bad value '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

const TimeSeries* TrendSet::find(std::string_view equipment, PointRole role) const {
  auto it = series.find(BindingKey{std::string(equipment), role});
  return it == series.end() ? nullptr : &it->second;
}

std::vector<TrendRow> parse_trend_rows(std::istream& in, const std::string& source, bool strict,
                                       std::size_t* skipped) {
  std::vector<TrendRow> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t skip_count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (line_no == 1) {
      if (v.size() >= 3 && static_cast<unsigned char>(v[0]) == 0xEF) v.remove_prefix(3);  // BOM
      if (v != "timestamp,point,value") {
        throw IoError(source + ": expected header 'timestamp,point,value'");
      }
      continue;
    }
    if (v.empty()) continue;
    try {
      const auto c1 = v.find(',');
      const auto c2 = c1 == std::string_view::npos ? c1 : v.find(',', c1 + 1);
      if (c2 == std::string_view::npos || v.find(',', c2 + 1) != std::string_view::npos) {
        throw Error("expected 3 fields");
      }
      TrendRow row{parse_timestamp(trim(v.substr(0, c1))),
                   std::string(trim(v.substr(c1 + 1, c2 - c1 - 1))),
                   parse_value(v.substr(c2 + 1))};
      if (row.point.empty()) throw Error("empty point id");
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      if (strict) {
        throw IoError(source + " line " + std::to_string(line_no) + ": " + e.what());
      }
      ++skip_count;
    }
  }
  if (skipped) *skipped += skip_count;
  return rows;
}

std::map<std::string, std::vector<TimedSample>> group_rows(std::vector<TrendRow> rows) {
  // Stable sort keeps file order among equal (point, time) so the last row wins.
  std::stable_sort(rows.begin(), rows.end(), [](const TrendRow& a, const TrendRow& b) {
    if (a.point != b.point) return a.point < b.point;
    return a.time < b.time;
  });
  std::map<std::string, std::vector<TimedSample>> out;
  for (auto& r : rows) {
    auto& samples = out[r.point];
    if (!samples.empty() && samples.back().time == r.time) {
      samples.back().value = r.value;
    } else {
      samples.push_back({r.time, r.value});
    }
  }
  return out;
}

TrendSet read_trends(std::span<const std::filesystem::path> paths, const PointBinding& binding,
                     const IngestOptions& options) {
  TrendSet set;
  std::vector<TrendRow> rows;
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open '" + p.string() + "'");
    auto part = parse_trend_rows(in, p.string(), options.strict, &set.rows_skipped);
    rows.insert(rows.end(), std::make_move_iterator(part.begin()),
                std::make_move_iterator(part.end()));
  }
  set.rows_read = rows.size();

  std::set<std::string> ignored;
  auto keep = std::partition(rows.begin(), rows.end(),
                             [&](const TrendRow& r) { return binding.key_of(r.point) != nullptr; });
  for (auto it = keep; it != rows.end(); ++it) ignored.insert(it->point);
  set.rows_ignored = static_cast<std::size_t>(rows.end() - keep);
  set.points_ignored = ignored.size();
  rows.erase(keep, rows.end());

  for (auto& [point, samples] : group_rows(std::move(rows))) {
    const BindingKey& key = *binding.key_of(point);
    const PointInfo& info = binding.points.at(point);
    Unit unit = info.unit;
    if (unit == Unit::Percent) {
      for (auto& s : samples) {
        if (s.value) *s.value /= 100.0;
      }
      unit = Unit::Fraction;
    } else if (unit == Unit::Boolean) {
      for (auto& s : samples) {
        if (s.value) *s.value = *s.value != 0.0 ? 1.0 : 0.0;
      }
    }
    const auto policy = unit == Unit::Boolean ? ResamplePolicy::last() : ResamplePolicy::mean();
    set.series.emplace(key, bin_samples(point, unit, samples, options.interval, policy));
  }
  return set;
}

TrendSet read_trends(const std::filesystem::path& path, const PointBinding& binding,
                     const IngestOptions& options) {
  return read_trends(std::span<const std::filesystem::path>(&path, 1), binding, options);
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("format_double failed");
  return std::string(buf, ptr);
}

void write_trends_header(std::ostream& out) { out << "timestamp,point,value\n"; }

void write_trend_row(std::ostream& out, Timestamp t, std::string_view point, Sample value,
                     int utc_offset_minutes) {
  out << format_timestamp(t, utc_offset_minutes) << ',' << point << ',';
  if (value) out << format_double(*value);
  out << '\n';
}

void write_trends(std::ostream& out, std::span<const TimeSeries> series, int utc_offset_minutes) {
  write_trends_header(out);
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      write_trend_row(out, s.time_at(i), s.point_id(), s[i], utc_offset_minutes);
    }
  }
}

}  // namespace apportion
