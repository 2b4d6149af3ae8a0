#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "rainstore/error.hpp"
#include "rainstore/rng.hpp"
#include "rainstore/time.hpp"

using namespace rainstore;

TEST(Time, ParseAndFormatRoundTrip) {
  for (const char* text : {"2016-04-01T00:00:00Z", "2019-12-31T23:59:59Z", "2020-02-29T12:30:00Z"}) {
    EXPECT_EQ(format_timestamp(parse_timestamp(text)), text);
  }
  EXPECT_EQ(parse_timestamp("2018-01-07"), parse_timestamp("2018-01-07T00:00:00Z"));
  EXPECT_EQ(parse_timestamp("2018-01-07T06:00"), parse_timestamp("2018-01-07T06:00:00"));
}

TEST(Time, EpochSeconds) {
  EXPECT_EQ(parse_timestamp("1970-01-02").time_since_epoch().count(), 86400);
  // 2000-03-01 is 11017 days after the epoch
  EXPECT_EQ(parse_timestamp("2000-03-01").time_since_epoch().count(), 11017LL * 86400);
}

TEST(Time, RejectsMalformed) {
  for (const char* text : {"", "2019-13-01", "2019-02-30", "2019-1-1", "2019-01-01T24:00", "2019-01-01X",
                           "2019-01-01T12"}) {
    EXPECT_THROW(parse_timestamp(text), Error) << text;
  }
}

TEST(Time, DateOnlyEndCoversWholeDay) {
  const TimeRange r = parse_time_range("2017-12-30", "2017-12-31");
  EXPECT_TRUE(r.contains(parse_timestamp("2017-12-31T23:00:00")));
  EXPECT_FALSE(r.contains(parse_timestamp("2018-01-01T00:00:00")));
  const TimeRange exact = parse_time_range("2017-12-30", "2017-12-31T06:00");
  EXPECT_FALSE(exact.contains(parse_timestamp("2017-12-31T07:00:00")));
  EXPECT_TRUE(is_date_only("2017-12-31"));
  EXPECT_FALSE(is_date_only("2017-12-31T00:00"));
}

TEST(Time, CalendarFields) {
  const CalendarFields f = calendar_fields(parse_timestamp("2019-07-04T17:45:00"));
  EXPECT_EQ(f.hour, 17);
  EXPECT_EQ(f.day, 4);
  EXPECT_EQ(f.month, 7);
  EXPECT_EQ(day_of_year(parse_timestamp("2019-01-01T23:00")), 0);
  EXPECT_EQ(day_of_year(parse_timestamp("2019-12-31")), 364);
  EXPECT_EQ(day_of_year(parse_timestamp("2020-12-31")), 365);
  EXPECT_EQ(day_of_year(parse_timestamp("2020-03-01")), 60);
}

TEST(Rng, SampleWithoutReplacementIsSortedDistinctAndInRange) {
  Engine rng(5);
  for (std::uint64_t n : {1ULL, 10ULL, 1000ULL}) {
    for (std::uint64_t k : std::vector<std::uint64_t>{0, 1, n / 2, n}) {
      const auto s = sample_without_replacement(n, k, rng);
      ASSERT_EQ(s.size(), k);
      EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
      EXPECT_EQ(std::set<std::uint64_t>(s.begin(), s.end()).size(), k);
      for (auto v : s) EXPECT_LT(v, n);
    }
  }
  EXPECT_THROW(sample_without_replacement(3, 4, rng), Error);
}

TEST(Rng, SampleWithoutReplacementIsUniform) {
  // each of 10 items is picked with probability 3/10
  Engine rng(11);
  std::vector<int> hits(10, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    for (auto v : sample_without_replacement(10, 3, rng)) ++hits[v];
  }
  const double p = 0.3, sd = std::sqrt(trials * p * (1 - p));
  for (int h : hits) EXPECT_NEAR(h, trials * p, 4 * sd);
}

TEST(Rng, DeriveSeedSeparatesTags) {
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
  EXPECT_EQ(derive_seed(9, "tag"), derive_seed(9, "tag"));
}

TEST(Rng, UniformIndexAndNormalMoments) {
  Engine rng(3);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[uniform_index(rng, 7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  double sum = 0, sum2 = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    sum += z;
    sum2 += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.015);
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}
