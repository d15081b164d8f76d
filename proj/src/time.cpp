#include "apportion/time.hpp"

#include <charconv>
#include <cstdio>

#include "apportion/error.hpp"

namespace apportion {

namespace {

int digits(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  if (pos + len > text.size()) throw Error("bad timestamp '" + std::string(text) + "'");
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len) {
    throw Error("bad timestamp '" + std::string(text) + "'");
  }
  return value;
}

void expect(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) {
    throw Error("bad timestamp '" + std::string(text) + "'");
  }
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[Z|+HH:MM|-HH:MM]
  const int y = digits(text, 0, 4);
  expect(text, 4, '-');
  const int mo = digits(text, 5, 2);
  expect(text, 7, '-');
  const int d = digits(text, 8, 2);
  if (text.size() < 11 || (text[10] != 'T' && text[10] != ' ')) {
    throw Error("bad timestamp '" + std::string(text) + "'");
  }
  const int hh = digits(text, 11, 2);
  expect(text, 13, ':');
  const int mm = digits(text, 14, 2);
  expect(text, 16, ':');
  const int ss = digits(text, 17, 2);

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw Error("bad timestamp '" + std::string(text) + "'");
  }

  std::size_t pos = 19;
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char c = text[pos];
    if (c == 'Z') {
      if (pos + 1 != text.size()) throw Error("bad timestamp '" + std::string(text) + "'");
    } else if (c == '+' || c == '-') {
      const int oh = digits(text, pos + 1, 2);
      expect(text, pos + 3, ':');
      const int om = digits(text, pos + 4, 2);
      if (pos + 6 != text.size()) throw Error("bad timestamp '" + std::string(text) + "'");
      offset_minutes = (oh * 60 + om) * (c == '-' ? -1 : 1);
    } else {
      throw Error("bad timestamp '" + std::string(text) + "'");
    }
  }
  const sys_seconds local = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
  return local - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp t, int utc_offset_minutes) {
  using namespace std::chrono;
  const sys_seconds local = t + minutes{utc_offset_minutes};
  const auto day_start = floor<days>(local);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{local - day_start};
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", int(ymd.year()),
                        unsigned(ymd.month()), unsigned(ymd.day()),
                        static_cast<long>(hms.hours().count()),
                        static_cast<long>(hms.minutes().count()),
                        static_cast<long>(hms.seconds().count()));
  if (utc_offset_minutes == 0) {
    std::snprintf(buf + n, sizeof buf - static_cast<std::size_t>(n), "Z");
  } else {
    const int a = utc_offset_minutes < 0 ? -utc_offset_minutes : utc_offset_minutes;
    std::snprintf(buf + n, sizeof buf - static_cast<std::size_t>(n), "%c%02d:%02d",
                  utc_offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
  }
  return buf;
}

int parse_clock_minutes(std::string_view text) {
  if (text.size() != 5 || text[2] != ':') throw Error("bad clock time '" + std::string(text) + "'");
  const int h = digits(text, 0, 2);
  const int m = digits(text, 3, 2);
  if (h > 24 || m > 59 || (h == 24 && m != 0)) {
    throw Error("bad clock time '" + std::string(text) + "'");
  }
  return h * 60 + m;
}

}  // namespace apportion
