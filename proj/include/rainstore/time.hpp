#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace rainstore {

using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS" with an
// optional trailing "Z". All times are UTC.
Timestamp parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp ts);

// True when the text carries only a calendar date.
bool is_date_only(std::string_view text);

// Inclusive range of timestamps.
struct TimeRange {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp ts) const { return ts >= start && ts <= end; }
  bool empty() const { return end < start; }
};

// Parses a range where a date-only end bound covers the whole day.
TimeRange parse_time_range(std::string_view start, std::string_view end);

// Zero-based day of year.
int day_of_year(Timestamp ts);

struct CalendarFields {
  int hour;   // 0..23
  int day;    // 1..31
  int month;  // 1..12
};

CalendarFields calendar_fields(Timestamp ts);

inline Timestamp add_hours(Timestamp ts, std::int64_t hours) {
  return ts + std::chrono::hours(hours);
}

}  // namespace rainstore
