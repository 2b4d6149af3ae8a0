#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rainstore/baselines.hpp"
#include "rainstore/error.hpp"
#include "rainstore/metrics.hpp"
#include "rainstore/rng.hpp"
#include "test_support.hpp"

using namespace rainstore;
using rainstore::testing::TempDir;

namespace {

// 40 days of hourly frames from 2016-01-01 split into three disjoint blocks.
PartitionSpec short_partition() {
  PartitionSpec p;
  p.train = parse_time_range("2016-01-01T12:00", "2016-01-12T00:00");
  p.val = parse_time_range("2016-01-16T00:00", "2016-01-20T00:00");
  p.test = parse_time_range("2016-01-24T00:00", "2016-02-03T00:00");
  p.t0_stride_h = 6;
  return p;
}

SampleSpec short_spec() {
  SampleSpec s;
  s.input_vars = {"tp"};
  s.lead_interval_h = 6;
  s.max_lead_h = 24;
  s.target_var = "tp";
  return s;
}

double pattern(int i, int j) { return 1.0 + 0.5 * i + 0.25 * j; }

}  // namespace

TEST(Baselines, PersistenceReturnsTheIssueFrame) {
  TempDir dir;
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(45.0), "2016-01-01", 3600, 10,
      {{"tp", [](std::int64_t t, int i, int j) { return static_cast<double>(t * 100 + i * 10 + j); }}});
  const Timestamp t0 = parse_timestamp("2016-01-01T04:00");
  const Forecast f = persistence(s, "tp", t0, 72);
  EXPECT_EQ(f.field.values, s.read_frame("tp", 4).values);
  EXPECT_EQ(f.issued, t0);
  EXPECT_EQ(f.valid_at, add_hours(t0, 72));
  // lead zero scores zero against its own target
  const Forecast same = persistence(s, "tp", t0, 0);
  EXPECT_EQ(lw_rmse_frame(same.field.values, s.read_frame("tp", 4).values, s.grid()), 0.0);
  EXPECT_THROW(persistence(s, "tp", parse_timestamp("2016-02-01T00:00"), 24), Error);
  EXPECT_THROW(persistence(s, "tp", parse_timestamp("2016-01-01T04:30"), 24), Error);
}

TEST(Baselines, StationaryStoreHasZeroPersistenceError) {
  TempDir dir;
  const Datastore s = rainstore::testing::make_store(dir / "s", make_grid(22.5), "2016-01-01", 3600, 40 * 24,
                                                     {{"tp", [](std::int64_t, int i, int j) { return pattern(i, j); }}});
  const std::vector<Datastore> stores{s};
  const BaselineReport r = evaluate_baselines(stores, short_spec(), short_partition(), std::vector<int>{});
  ASSERT_EQ(r.leads, (std::vector<int>{6, 12, 18, 24}));
  for (double v : r.persistence) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(r.climatology, 0.0, 1e-12);
  EXPECT_NEAR(r.weekly_climatology, 0.0, 1e-12);
  EXPECT_GT(r.climatology_count, 0u);
}

TEST(Baselines, PersistenceBeatsClimatologyOnStepChange) {
  // Train sees one level, val/test another. Persistence stays exact while the
  // climatology carries the train-level offset.
  TempDir dir;
  const Timestamp switch_at = parse_timestamp("2016-01-14T00:00");
  const Timestamp start = parse_timestamp("2016-01-01");
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(22.5), "2016-01-01", 3600, 40 * 24, {{"tp", [&](std::int64_t t, int i, int j) {
        return add_hours(start, t) < switch_at ? pattern(i, j) : pattern(i, j) + 2.0;
      }}});
  const std::vector<Datastore> stores{s};
  const BaselineReport r = evaluate_baselines(stores, short_spec(), short_partition(), std::vector<int>{});
  for (double v : r.persistence) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(r.climatology, 2.0, 1e-9);
  EXPECT_NEAR(r.weekly_climatology, 2.0, 1e-9);
}

TEST(Baselines, ClimatologySimpleCases) {
  TempDir dir;
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(45.0), "2016-01-01", 3600, 3,
      {{"c", [](std::int64_t, int, int) { return 4.25; }},
       {"x", [](std::int64_t t, int, int) { return t == 0 ? 0.0 : 2.0; }}});
  const TimeRange all = parse_time_range("2016-01-01", "2016-01-01");
  for (double v : climatology(s, "c", all).mean.values) EXPECT_EQ(v, 4.25);
  const TimeRange two = parse_time_range("2016-01-01T00:00", "2016-01-01T01:00");
  for (double v : climatology(s, "x", two).mean.values) EXPECT_EQ(v, 1.0);
  EXPECT_THROW(climatology(s, "x", parse_time_range("2017-01-01", "2017-01-02")), Error);
}

TEST(Baselines, ClimatologyMatchesOracleAndIgnoresFrameOrder) {
  TempDir dir;
  const GridSpec g = make_grid(22.5);
  const int n = 50;
  std::vector<std::vector<double>> frames(n, std::vector<double>(g.cells()));
  Engine rng(77);
  for (auto& f : frames) {
    for (double& v : f) v = static_cast<float>(10.0 + 3.0 * standard_normal(rng));
  }
  frames[7][5] = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  shuffle(std::span<int>(perm), rng);
  const auto cell = [&](const std::vector<double>& f, int i, int j) { return f[g.index(i, j)]; };
  const Datastore a = rainstore::testing::make_store(
      dir / "a", g, "2016-01-01", 3600, n, {{"x", [&](std::int64_t t, int i, int j) { return cell(frames[t], i, j); }}});
  const Datastore b = rainstore::testing::make_store(
      dir / "b", g, "2016-01-01", 3600, n,
      {{"x", [&](std::int64_t t, int i, int j) { return cell(frames[perm[t]], i, j); }}});
  const TimeRange range = parse_time_range("2016-01-01", "2016-01-03");
  const Climatology ca = climatology(a, "x", range);
  const Climatology cb = climatology(b, "x", range);
  for (std::size_t c = 0; c < g.cells(); ++c) {
    long double sum = 0;
    int count = 0;
    for (const auto& f : frames) {
      if (std::isnan(f[c])) continue;
      sum += f[c];
      ++count;
    }
    EXPECT_NEAR(ca.mean.values[c], static_cast<double>(sum / count), 1e-10);
    EXPECT_NEAR(cb.mean.values[c], ca.mean.values[c], 1e-12);
    EXPECT_EQ(ca.counts[c], static_cast<std::uint64_t>(count));
  }
  EXPECT_TRUE(ca.warnings.empty());
}

TEST(Baselines, PixelWithoutFramesIsNanWithWarning) {
  TempDir dir;
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(45.0), "2016-01-01", 3600, 4, {{"x", [](std::int64_t, int i, int j) {
        return i == 0 && j == 0 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
      }}});
  const Climatology c = climatology(s, "x", parse_time_range("2016-01-01", "2016-01-01"));
  EXPECT_TRUE(std::isnan(c.mean.values[0]));
  EXPECT_EQ(c.counts[0], 0u);
  ASSERT_EQ(c.warnings.size(), 1u);
}

TEST(Baselines, WeekBuckets) {
  EXPECT_EQ(week_bucket(parse_timestamp("2016-01-01")), 0);
  EXPECT_EQ(week_bucket(parse_timestamp("2016-01-07T23:00")), 0);
  EXPECT_EQ(week_bucket(parse_timestamp("2016-01-08")), 1);
  EXPECT_EQ(week_bucket(parse_timestamp("2016-12-30")), 52);  // day 364
  EXPECT_EQ(week_bucket(parse_timestamp("2016-12-31")), 52);  // leap day 365 clamps
  EXPECT_EQ(week_bucket(parse_timestamp("2017-12-31")), 52);
}

TEST(Baselines, WeeklyClimatologyReproducesWeekIndexedStore) {
  TempDir dir;
  const Timestamp start = parse_timestamp("2016-01-01");
  // Six-hourly frames through all of 2016, value = week bucket of the frame.
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(45.0), "2016-01-01", 6 * 3600, 366 * 4, {{"w", [&](std::int64_t t, int, int) {
        return static_cast<double>(week_bucket(add_hours(start, 6 * t)));
      }}});
  const WeeklyClimatology w = weekly_climatology(s, "w", parse_time_range("2016-01-01", "2016-12-31"));
  ASSERT_EQ(w.weeks.size(), 53u);
  for (Timestamp ts = start; ts < parse_timestamp("2017-01-01"); ts = add_hours(ts, 13)) {
    for (double v : w.lookup(ts).values) EXPECT_EQ(v, week_bucket(ts));
  }
  EXPECT_TRUE(w.warnings.empty());

  // pooling the buckets weighted by their frame counts gives the all-time mean
  const Climatology all = climatology(s, "w", parse_time_range("2016-01-01", "2016-12-31"));
  for (std::size_t c = 0; c < all.mean.values.size(); ++c) {
    double pooled = 0.0;
    std::uint64_t frames = 0;
    for (int b = 0; b < kWeekBuckets; ++b) {
      pooled += w.weeks[b].values[c] * static_cast<double>(w.counts[b][c]);
      frames += w.counts[b][c];
    }
    EXPECT_NEAR(pooled / static_cast<double>(frames), all.mean.values[c], 1e-10);
  }
}

TEST(Baselines, EmptyWeekFallsBackToAllTime) {
  TempDir dir;
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(45.0), "2016-01-01", 3600, 48, {{"x", [](std::int64_t t, int, int) {
        return static_cast<double>(t);
      }}});
  const WeeklyClimatology w = weekly_climatology(s, "x", parse_time_range("2016-01-01", "2016-01-02"));
  EXPECT_EQ(w.frames_per_week[0], 48u);
  for (double v : w.weeks[10].values) EXPECT_DOUBLE_EQ(v, 23.5);
  ASSERT_EQ(w.warnings.size(), 1u);
  EXPECT_EQ(w.warnings[0].rfind("52 week bucket(s) have no frames (1,2,", 0), 0u) << w.warnings[0];
}

TEST(Baselines, ClimatologyErrorApproachesNoiseStd) {
  TempDir dir;
  SynthConfig cfg;
  cfg.grid = make_grid(11.25);
  cfg.n_steps = 40 * 24;
  SynthVariable v = rainstore::testing::synth_var("tp", GeneratorKind::ar1_noise);
  v.mean = 5.0;
  v.mean_amplitude = 2.0;
  v.sigma = 1.5;
  v.phi = 0.3;
  cfg.variables = {v};
  const Datastore s = rainstore::testing::synth_store(dir.path(), cfg, 11);
  const std::vector<Datastore> stores{s};
  const BaselineReport r = evaluate_baselines(stores, short_spec(), short_partition(), std::vector<int>{});
  EXPECT_NEAR(r.climatology, 1.5, 0.05 * 1.5);
  // With phi^tau near zero persistence error is sqrt(2) sigma at every lead.
  for (double p : r.persistence) EXPECT_NEAR(p, std::sqrt(2.0) * 1.5, 0.05 * 1.5 * std::sqrt(2.0));
}

TEST(Baselines, PersistenceErrorGrowsWithLead) {
  TempDir dir;
  SynthConfig cfg;
  cfg.grid = make_grid(11.25);
  cfg.n_steps = 40 * 24;
  SynthVariable v = rainstore::testing::synth_var("tp", GeneratorKind::ar1_noise);
  v.sigma = 1.0;
  v.phi = 0.97;
  cfg.variables = {v};
  const Datastore s = rainstore::testing::synth_store(dir.path(), cfg, 5);
  const std::vector<Datastore> stores{s};
  const BaselineReport r = evaluate_baselines(stores, short_spec(), short_partition(), std::vector<int>{});
  for (std::size_t k = 0; k < r.leads.size(); ++k) {
    // Expected sqrt(2 (1 - phi^tau)); per-forecast spread over n forecasts
    // bounds the sampling error of the mean.
    const double expect = std::sqrt(2.0 * (1.0 - std::pow(0.97, r.leads[k])));
    const double se = expect / std::sqrt(static_cast<double>(r.persistence_counts[k]));
    if (k > 0) EXPECT_GE(r.persistence[k], r.persistence[k - 1] - 3.0 * se);
    EXPECT_NEAR(r.persistence[k], expect, 0.1 * expect);
  }
}

TEST(Baselines, ReportSerialization) {
  TempDir dir;
  const Datastore s = rainstore::testing::make_store(dir / "s", make_grid(22.5), "2016-01-01", 3600, 40 * 24,
                                                     {{"tp", [](std::int64_t, int i, int j) { return pattern(i, j); }}});
  const std::vector<Datastore> stores{s};
  const BaselineReport r = evaluate_baselines(stores, short_spec(), short_partition(), std::vector<int>{12});
  const auto j = to_json(r);
  EXPECT_EQ(j["metric"], "lw_rmse");
  EXPECT_TRUE(j["persistence"].contains("12h"));
  EXPECT_NE(format_table(r).find("Climatology (weekly)"), std::string::npos);
  EXPECT_THROW(evaluate_baselines(stores, short_spec(), short_partition(), std::vector<int>{7}), Error);
  PartitionSpec bad = short_partition();
  bad.val.start = parse_timestamp("2016-01-12T06:00");
  EXPECT_THROW(evaluate_baselines(stores, short_spec(), bad, std::vector<int>{}), Error);
}
