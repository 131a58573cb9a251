#pragma once

#include <string>
#include <string_view>

namespace leakbench {

// ISO calendar dates. Panels store dates as "YYYY-MM-DD" strings, which sort
// lexicographically in chronological order; these helpers cover the arithmetic
// the engine needs (year/month extraction, trading-calendar generation).

struct CivilDate {
  int year = 0;
  int month = 0;  // 1..12
  int day = 0;    // 1..31
};

// Parses "YYYY-MM-DD"; throws Error("BadDate") on malformed input.
CivilDate parse_iso_date(std::string_view iso);

std::string format_iso_date(const CivilDate& d);

// Days since 1970-01-01 (proleptic Gregorian).
long days_from_civil(const CivilDate& d);
CivilDate civil_from_days(long days);

// 0 = Monday .. 6 = Sunday.
int weekday_from_days(long days);

inline bool is_weekend(long days) { return weekday_from_days(days) >= 5; }

int year_of(std::string_view iso);

// (year * 12 + month - 1); used to key monthly peer graphs.
int month_key(std::string_view iso);

}  // namespace leakbench
