#include "rainstore/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "rainstore/error.hpp"
#include "rainstore/metrics.hpp"

namespace rainstore {

namespace {

const Datastore& store_with(std::span<const Datastore> stores, const std::string& var) {
  for (const auto& s : stores) {
    const VariableSpec* v = s.header().find(var);
    if (v != nullptr && !v->is_static()) return s;
  }
  throw Error(ErrorCode::unknown_variable, "temporal variable '" + var + "' not found in any store");
}

bool has_nan(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
}

std::pair<std::int64_t, std::int64_t> checked_frames(const Datastore& store, std::string_view var,
                                                     const TimeRange& range) {
  if (store.variable(var).is_static()) {
    throw Error(ErrorCode::invalid_argument, "climatology needs a temporal variable");
  }
  if (range.empty()) throw Error(ErrorCode::invalid_argument, "empty climatology range");
  const auto frames = store.header().frames_in(range);
  if (frames.first >= frames.second) {
    throw Error(ErrorCode::insufficient_data, "no frames of '" + std::string(var) + "' in climatology range");
  }
  return frames;
}

}  // namespace

Forecast persistence(const Datastore& store, std::string_view var, Timestamp t0, int tau_h) {
  const auto t = store.header().frame_at(t0);
  if (!t) {
    throw Error(ErrorCode::out_of_range, "no frame of '" + std::string(var) + "' at " + format_timestamp(t0));
  }
  return {store.read_frame(var, *t), t0, add_hours(t0, tau_h)};
}

Climatology climatology(const Datastore& store, std::string_view var, const TimeRange& range) {
  const auto [first, last] = checked_frames(store, var, range);
  const std::size_t cells = store.grid().cells();
  std::vector<double> sum(cells, 0.0);
  Climatology c;
  c.counts.assign(cells, 0);
  for (std::int64_t t = first; t < last; ++t) {
    const auto frame = store.frame_view(var, t);
    for (std::size_t i = 0; i < cells; ++i) {
      if (std::isnan(frame[i])) continue;
      sum[i] += frame[i];
      ++c.counts[i];
    }
  }
  std::size_t empty = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    if (c.counts[i] == 0) {
      sum[i] = std::numeric_limits<double>::quiet_NaN();
      ++empty;
    } else {
      sum[i] /= static_cast<double>(c.counts[i]);
    }
  }
  if (empty > 0) {
    c.warnings.push_back(std::to_string(empty) + " pixel(s) of '" + std::string(var) +
                         "' have no valid frame; climatology is NaN there");
  }
  c.mean = Field(store.grid(), std::move(sum), store.variable(var).units);
  return c;
}

int week_bucket(Timestamp ts) { return std::min(day_of_year(ts) / 7, kWeekBuckets - 1); }

WeeklyClimatology weekly_climatology(const Datastore& store, std::string_view var, const TimeRange& range) {
  const auto [first, last] = checked_frames(store, var, range);
  const std::size_t cells = store.grid().cells();
  std::vector<std::vector<double>> sums(kWeekBuckets, std::vector<double>(cells, 0.0));
  WeeklyClimatology w;
  w.counts.assign(kWeekBuckets, std::vector<std::uint64_t>(cells, 0));
  w.frames_per_week.assign(kWeekBuckets, 0);
  for (std::int64_t t = first; t < last; ++t) {
    const int b = week_bucket(store.header().timestamp(t));
    ++w.frames_per_week[b];
    const auto frame = store.frame_view(var, t);
    for (std::size_t i = 0; i < cells; ++i) {
      if (std::isnan(frame[i])) continue;
      sums[b][i] += frame[i];
      ++w.counts[b][i];
    }
  }
  const Climatology all = climatology(store, var, range);
  w.warnings = all.warnings;
  std::vector<int> empty_weeks;
  for (int b = 0; b < kWeekBuckets; ++b) {
    std::size_t fallback = 0;
    for (std::size_t i = 0; i < cells; ++i) {
      if (w.counts[b][i] == 0) {
        sums[b][i] = all.mean.values[i];
        ++fallback;
      } else {
        sums[b][i] /= static_cast<double>(w.counts[b][i]);
      }
    }
    if (w.frames_per_week[b] == 0) {
      empty_weeks.push_back(b);
    } else if (fallback > 0) {
      w.warnings.push_back("week " + std::to_string(b) + ": " + std::to_string(fallback) +
                           " pixel(s) without valid frames use all-time climatology");
    }
    w.weeks.emplace_back(store.grid(), std::move(sums[b]), store.variable(var).units);
  }
  if (!empty_weeks.empty()) {
    std::string list;
    for (int b : empty_weeks) list += (list.empty() ? "" : ",") + std::to_string(b);
    w.warnings.push_back(std::to_string(empty_weeks.size()) + " week bucket(s) have no frames (" + list +
                         "); using all-time climatology");
  }
  return w;
}

BaselineReport evaluate_baselines(std::span<const Datastore> stores, const SampleSpec& spec,
                                  const PartitionSpec& part, std::span<const int> leads,
                                  const std::optional<TimeRange>& climatology_range, Split split) {
  if (const auto violation = validate_partition(part, spec)) {
    throw Error(ErrorCode::invalid_argument, "partition overlap: " + violation->describe());
  }
  const Datastore& store = store_with(stores, spec.target_var);
  const StoreHeader& h = store.header();
  const GridSpec& grid = store.grid();
  const std::string& var = spec.target_var;

  BaselineReport r;
  r.target_var = var;
  r.split = split;
  r.leads.assign(leads.begin(), leads.end());
  if (r.leads.empty()) r.leads = spec.leads();
  for (int tau : r.leads) lead_onehot(tau, spec);  // lattice check
  r.climatology_range = climatology_range.value_or(part.train);

  const Climatology clim = climatology(store, var, r.climatology_range);
  const WeeklyClimatology weekly = weekly_climatology(store, var, r.climatology_range);
  r.warnings = weekly.warnings;

  const TimeRange& range = part.range(split);
  std::set<std::int64_t> valid_frames;
  for (int tau : r.leads) {
    double sum = 0.0;
    std::uint64_t n = 0;
    for (Timestamp t0 = range.start; t0 <= range.end; t0 += std::chrono::hours(part.t0_stride_h)) {
      const auto issue = h.frame_at(t0);
      const auto valid = h.frame_at(add_hours(t0, tau));
      if (!issue || !valid) continue;
      const Field pred = store.read_frame(var, *issue);
      const Field target = store.read_frame(var, *valid);
      if (has_nan(pred.values) || has_nan(target.values)) {
        ++r.skipped;
        continue;
      }
      sum += lw_rmse_frame(pred.values, target.values, grid);
      ++n;
      valid_frames.insert(*valid);
    }
    if (n == 0) {
      throw Error(ErrorCode::insufficient_data,
                  "no evaluable " + std::string(to_string(split)) + " forecasts at lead " + std::to_string(tau) + " h");
    }
    r.persistence.push_back(sum / static_cast<double>(n));
    r.persistence_counts.push_back(n);
  }

  double clim_sum = 0.0, weekly_sum = 0.0;
  for (std::int64_t t : valid_frames) {
    const Field target = store.read_frame(var, t);
    const Field& wk = weekly.lookup(h.timestamp(t));
    if (has_nan(clim.mean.values) || has_nan(wk.values)) {
      ++r.skipped;
      continue;
    }
    clim_sum += lw_rmse_frame(clim.mean.values, target.values, grid);
    weekly_sum += lw_rmse_frame(wk.values, target.values, grid);
    ++r.climatology_count;
  }
  if (r.climatology_count == 0) {
    throw Error(ErrorCode::insufficient_data, "climatology has NaN pixels at every evaluated time");
  }
  r.climatology = clim_sum / static_cast<double>(r.climatology_count);
  r.weekly_climatology = weekly_sum / static_cast<double>(r.climatology_count);
  return r;
}

nlohmann::json to_json(const BaselineReport& r) {
  nlohmann::json persistence = nlohmann::json::object();
  for (std::size_t k = 0; k < r.leads.size(); ++k) {
    persistence[std::to_string(r.leads[k]) + "h"] = r.persistence[k];
  }
  return {{"target", r.target_var},
          {"split", to_string(r.split)},
          {"metric", "lw_rmse"},
          {"leads_h", r.leads},
          {"persistence", persistence},
          {"persistence_counts", r.persistence_counts},
          {"climatology", r.climatology},
          {"weekly_climatology", r.weekly_climatology},
          {"climatology_count", r.climatology_count},
          {"climatology_range", {format_timestamp(r.climatology_range.start), format_timestamp(r.climatology_range.end)}},
          {"skipped", r.skipped},
          {"warnings", r.warnings}};
}

std::string format_table(const BaselineReport& r) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-22s", "Baseline");
  out += buf;
  for (int tau : r.leads) {
    std::snprintf(buf, sizeof buf, " %9s", (std::to_string(tau) + "h").c_str());
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-22s", "Persistence");
  out += buf;
  for (double v : r.persistence) {
    std::snprintf(buf, sizeof buf, " %9.4f", v);
    out += buf;
  }
  out += "\n";
  std::snprintf(buf, sizeof buf, "%-22s %9.4f (all leads)\n", "Climatology", r.climatology);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-22s %9.4f (all leads)\n", "Climatology (weekly)", r.weekly_climatology);
  out += buf;
  return out;
}

}  // namespace rainstore
