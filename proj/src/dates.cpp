#include "leakbench/dates.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "leakbench/errors.hpp"

namespace leakbench {

namespace {

int parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail("BadDate", "non-numeric date component '" + std::string(s) + "'");
  }
  return value;
}

bool is_leap(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

int days_in_month(int y, int m) {
  static constexpr std::array<int, 12> kDays = {31, 28, 31, 30, 31, 30,
                                                31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return kDays[static_cast<std::size_t>(m - 1)];
}

}  // namespace

CivilDate parse_iso_date(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    fail("BadDate", "expected YYYY-MM-DD, got '" + std::string(iso) + "'");
  }
  CivilDate d;
  d.year = parse_int(iso.substr(0, 4));
  d.month = parse_int(iso.substr(5, 2));
  d.day = parse_int(iso.substr(8, 2));
  if (d.month < 1 || d.month > 12 || d.day < 1 ||
      d.day > days_in_month(d.year, d.month)) {
    fail("BadDate", "invalid calendar date '" + std::string(iso) + "'");
  }
  return d;
}

std::string format_iso_date(const CivilDate& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

// Howard Hinnant's civil-days algorithms.
long days_from_civil(const CivilDate& d) {
  long y = d.year;
  const long m = d.month;
  const long dd = d.day;
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const long yoe = y - era * 400;
  const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;
  const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(long z) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const long doe = z - era * 146097;
  const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = yoe + era * 400;
  const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const long mp = (5 * doy + 2) / 153;
  const long d = doy - (153 * mp + 2) / 5 + 1;
  const long m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                   static_cast<int>(d)};
}

int weekday_from_days(long days) {
  // 1970-01-01 was a Thursday (weekday 3 with Monday = 0).
  long w = (days + 3) % 7;
  if (w < 0) w += 7;
  return static_cast<int>(w);
}

int year_of(std::string_view iso) { return parse_int(iso.substr(0, 4)); }

int month_key(std::string_view iso) {
  const int y = parse_int(iso.substr(0, 4));
  const int m = parse_int(iso.substr(5, 2));
  return y * 12 + (m - 1);
}

}  // namespace leakbench
