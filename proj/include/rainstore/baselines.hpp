#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rainstore/grid.hpp"
#include "rainstore/sampler.hpp"
#include "rainstore/store.hpp"
#include "rainstore/time.hpp"

namespace rainstore {

struct Forecast {
  Field field;
  Timestamp issued{};
  Timestamp valid_at{};
};

// The frame at t0, valid at t0 + tau.
Forecast persistence(const Datastore& store, std::string_view var, Timestamp t0, int tau_h);

struct Climatology {
  Field mean;
  std::vector<std::uint64_t> counts;  // valid frames per pixel
  std::vector<std::string> warnings;
};

// Per-pixel mean over the frames in range, skipping NaN. Pixels without any
// valid frame are NaN and produce a warning.
Climatology climatology(const Datastore& store, std::string_view var, const TimeRange& range);

inline constexpr int kWeekBuckets = 53;

// min(zero-based day of year / 7, 52)
int week_bucket(Timestamp ts);

struct WeeklyClimatology {
  std::vector<Field> weeks;                   // kWeekBuckets fields
  std::vector<std::uint64_t> frames_per_week;  // frames that fell in each bucket
  std::vector<std::vector<std::uint64_t>> counts;  // per bucket, valid frames per pixel
  std::vector<std::string> warnings;

  const Field& lookup(Timestamp ts) const { return weeks[static_cast<std::size_t>(week_bucket(ts))]; }
};

// Per-pixel mean per week bucket. Empty buckets (or pixels) fall back to the
// all-time climatology with a warning.
WeeklyClimatology weekly_climatology(const Datastore& store, std::string_view var, const TimeRange& range);

struct BaselineReport {
  std::string target_var;
  Split split = Split::test;
  std::vector<int> leads;
  std::vector<double> persistence;                // per lead
  std::vector<std::uint64_t> persistence_counts;  // evaluated forecasts per lead
  double climatology = 0.0;
  double weekly_climatology = 0.0;
  std::uint64_t climatology_count = 0;            // distinct valid times evaluated
  TimeRange climatology_range{};
  std::uint64_t skipped = 0;                      // forecasts dropped for NaN
  std::vector<std::string> warnings;
};

// lw-RMSE of persistence per lead and of both climatologies over the split.
// Climatologies depend only on the valid time, so they are scored once over
// the distinct valid times of the split. climatology_range defaults to the
// train range.
BaselineReport evaluate_baselines(std::span<const Datastore> stores, const SampleSpec& spec,
                                  const PartitionSpec& part, std::span<const int> leads,
                                  const std::optional<TimeRange>& climatology_range = std::nullopt,
                                  Split split = Split::test);

nlohmann::json to_json(const BaselineReport& report);
std::string format_table(const BaselineReport& report);

}  // namespace rainstore
