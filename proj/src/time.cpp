#include "rainstore/time.hpp"

#include <charconv>
#include <cstdio>
#include <algorithm>
#include <unordered_set>

#include "rainstore/error.hpp"
#include "rainstore/rng.hpp"

namespace rainstore {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::bad_version: return "bad_version";
    case ErrorCode::size_mismatch: return "size_mismatch";
    case ErrorCode::unsupported_dtype: return "unsupported_dtype";
    case ErrorCode::unknown_variable: return "unknown_variable";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::inconsistent_time: return "inconsistent_time";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::checksum_mismatch: return "checksum_mismatch";
    case ErrorCode::partition_violation: return "partition_violation";
  }
  return "unknown";
}

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len,
              std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) {
    throw Error(ErrorCode::format, "malformed timestamp '" + std::string(whole) + "'");
  }
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw Error(ErrorCode::format, "malformed timestamp '" + std::string(whole) + "'");
  }
  return value;
}

std::string_view strip_zulu(std::string_view text) {
  if (!text.empty() && (text.back() == 'Z' || text.back() == 'z')) {
    text.remove_suffix(1);
  }
  return text;
}

}  // namespace

bool is_date_only(std::string_view text) {
  return strip_zulu(text).size() == 10;
}

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const std::string_view body = strip_zulu(text);
  if (body.size() < 10 || body[4] != '-' || body[7] != '-') {
    throw Error(ErrorCode::format, "malformed timestamp '" + std::string(text) + "'");
  }
  const int y = parse_int(body, 0, 4, text);
  const int mo = parse_int(body, 5, 2, text);
  const int d = parse_int(body, 8, 2, text);
  int h = 0, mi = 0, s = 0;
  if (body.size() > 10) {
    if ((body[10] != 'T' && body[10] != ' ') || body.size() < 16 || body[13] != ':') {
      throw Error(ErrorCode::format, "malformed timestamp '" + std::string(text) + "'");
    }
    h = parse_int(body, 11, 2, text);
    mi = parse_int(body, 14, 2, text);
    if (body.size() > 16) {
      if (body.size() != 19 || body[16] != ':') {
        throw Error(ErrorCode::format, "malformed timestamp '" + std::string(text) + "'");
      }
      s = parse_int(body, 17, 2, text);
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(ErrorCode::format, "invalid calendar value in '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

TimeRange parse_time_range(std::string_view start, std::string_view end) {
  TimeRange range{parse_timestamp(start), parse_timestamp(end)};
  if (is_date_only(end)) {
    range.end += std::chrono::hours(24) - std::chrono::seconds(1);
  }
  if (range.empty()) {
    throw Error(ErrorCode::invalid_argument,
                "range end precedes start: " + std::string(start) + " .. " + std::string(end));
  }
  return range;
}

int day_of_year(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((day_point - jan1).count());
}

CalendarFields calendar_fields(Timestamp ts) {
  using namespace std::chrono;
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  return {static_cast<int>(hms.hours().count()), static_cast<int>(unsigned(ymd.day())),
          static_cast<int>(unsigned(ymd.month()))};
}

std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t k,
                                                      Engine& rng) {
  if (k > n) {
    throw Error(ErrorCode::invalid_argument, "cannot draw " + std::to_string(k) +
                                                 " distinct values from " + std::to_string(n));
  }
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(k * 2);
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t t = uniform_index(rng, j + 1);
    const std::uint64_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rainstore
