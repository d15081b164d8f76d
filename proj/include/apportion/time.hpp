#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace apportion {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

inline constexpr Seconds kHour{3600};
inline constexpr Seconds kDay{86400};

/// Half-open time interval [begin, end).
struct Window {
  Timestamp begin;
  Timestamp end;

  Seconds length() const { return end - begin; }
  bool contains(Timestamp t) const { return t >= begin && t < end; }
  bool empty() const { return end <= begin; }
  bool operator==(const Window&) const = default;
};

/// Parses ISO-8601 `YYYY-MM-DDTHH:MM:SS` followed by `Z` or `±HH:MM`.
/// A missing offset is read as UTC. Throws Error on malformed input.
Timestamp parse_timestamp(std::string_view text);

/// Formats as ISO-8601 in the given fixed offset; offset 0 prints `Z`.
std::string format_timestamp(Timestamp t, int utc_offset_minutes = 0);

/// Parses `HH:MM` into minutes after midnight.
int parse_clock_minutes(std::string_view text);

}  // namespace apportion
