#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "rainstore/error.hpp"
#include "rainstore/normalize.hpp"
#include "rainstore/rng.hpp"
#include "test_support.hpp"

using namespace rainstore;
using rainstore::testing::TempDir;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  double mean;
  double std;
};

// Long-double two-pass moments of the non-NaN values.
Moments oracle_moments(const std::vector<double>& xs) {
  long double sum = 0;
  std::size_t n = 0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    ++n;
  }
  const long double mean = sum / n;
  long double ss = 0;
  for (double x : xs) {
    if (!std::isnan(x)) ss += (x - mean) * (x - mean);
  }
  return {static_cast<double>(mean), static_cast<double>(std::sqrt(ss / n))};
}

// Neighbourhood standardization computed cell by cell from the definition.
Field oracle_local(const Field& f, int lat_width, const std::vector<int>& lon_widths) {
  const GridSpec& g = f.grid;
  Field out(g, kNan);
  for (int i = 0; i < g.n_lat; ++i) {
    for (int j = 0; j < g.n_lon; ++j) {
      if (std::isnan(f.at(i, j))) continue;
      std::vector<double> w;
      for (int r = i - lat_width / 2; r <= i + lat_width / 2; ++r) {
        if (r < 0 || r >= g.n_lat) continue;
        for (int d = -(lon_widths[i] / 2); d <= lon_widths[i] / 2; ++d) {
          w.push_back(f.at(r, ((j + d) % g.n_lon + g.n_lon) % g.n_lon));
        }
      }
      const Moments m = oracle_moments(w);
      out.at(i, j) = (f.at(i, j) - m.mean) / (m.std < 1e-8 ? 1.0 : m.std);
    }
  }
  return out;
}

Field random_field(const GridSpec& g, std::uint64_t seed, double scale = 1.0, double offset = 0.0) {
  Engine rng(seed);
  Field f(g, 0.0);
  for (double& v : f.values) v = offset + scale * standard_normal(rng);
  return f;
}

}  // namespace

TEST(Normalize, GlobalStatsMatchOracle) {
  TempDir dir;
  Engine rng(8);
  std::vector<double> all;
  const Datastore s = rainstore::testing::make_store(
      dir / "s", make_grid(22.5), "2020-01-01", 3600, 30,
      {{"x", [&](std::int64_t t, int i, int j) {
         const double v = (t == 3 && i == 1 && j == 1) ? kNan : static_cast<double>(static_cast<float>(
                                                                   280.0 + 15.0 * standard_normal(rng)));
         return v;
       }}});
  for (std::int64_t t = 0; t < 30; ++t) {
    for (float v : s.frame_view("x", t)) all.push_back(v);
  }
  const TimeRange r{parse_timestamp("2020-01-01"), parse_timestamp("2020-01-02T05:00")};
  const VarStats st = global_stats(s, "x", r);
  const Moments m = oracle_moments(all);
  EXPECT_NEAR(st.mean, m.mean, 1e-10 * std::abs(m.mean));
  EXPECT_NEAR(st.std, m.std, 1e-10 * m.std);
  EXPECT_EQ(st.count, all.size() - 1);

  // restricting the range
  const TimeRange first{parse_timestamp("2020-01-01"), parse_timestamp("2020-01-01T01:00")};
  const VarStats two = global_stats(s, "x", first);
  EXPECT_EQ(two.count, 2 * 128u);
  EXPECT_THROW(global_stats(s, "x", {parse_timestamp("2021-01-01"), parse_timestamp("2021-01-02")}), Error);
}

TEST(Normalize, StandardizedFieldHasZeroMeanUnitStd) {
  const GridSpec g = make_grid(5.625);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Field f = random_field(g, seed, 40.0, 5000.0);
    const VarStats st = field_stats(f, "x");
    const Field z = standardize_global(f, st);
    const Moments m = oracle_moments(z.values);
    EXPECT_NEAR(m.mean, 0.0, 1e-8);
    EXPECT_NEAR(m.std, 1.0, 1e-6);
    const Field back = destandardize_global(z, st);
    for (std::size_t k = 0; k < f.values.size(); ++k) EXPECT_NEAR(back.values[k], f.values[k], 1e-9);
  }
}

TEST(Normalize, ConstantVariableGetsUnitStd) {
  const Field f(make_grid(45.0), 7.5);
  const VarStats st = field_stats(f, "c");
  EXPECT_EQ(st.mean, 7.5);
  EXPECT_EQ(st.std, 1.0);
  for (double v : standardize_global(f, st).values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(field_stats(Field(make_grid(45.0), kNan), "n"), Error);
}

TEST(Normalize, LasMatchesOracle) {
  const GridSpec g = make_grid(22.5);  // 8 x 16
  Field f = random_field(g, 4);
  f.at(2, 3) = kNan;
  for (int k : {1, 3, 5, 7}) {
    const Field got = standardize_las(f, k);
    const Field expect = oracle_local(f, k, std::vector<int>(g.n_lat, k));
    for (std::size_t c = 0; c < f.values.size(); ++c) {
      if (std::isnan(expect.values[c])) {
        EXPECT_TRUE(std::isnan(got.values[c]));
      } else {
        EXPECT_NEAR(got.values[c], expect.values[c], 1e-9) << k << " " << c;
      }
    }
  }
}

TEST(Normalize, LasEdgeCases) {
  const GridSpec g = make_grid(22.5);
  for (double v : standardize_las(Field(g, 1234.5678), 3).values) EXPECT_EQ(v, 0.0);
  for (double v : standardize_las(random_field(g, 9), 1).values) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(standardize_las(Field(g, 0.0), 4), Error);
  EXPECT_THROW(standardize_las(Field(g, 0.0), 0), Error);
  EXPECT_THROW(standardize_las(Field(g, 0.0), 9), Error);  // taller than 8 rows
}

TEST(Normalize, LalasWidthDoublesAtSixtyDegrees) {
  const GridSpec g = grid_from_centers({60.0, 55.0, 50.0, 5.0, 0.0, -5.0, -60.0},
                                       [] {
                                         std::vector<double> lon;
                                         for (int j = 0; j < 72; ++j) lon.push_back(2.5 + 5.0 * j);
                                         return lon;
                                       }());
  const LalasKernel k = lalas_kernel(g, 2000.0);
  const double equator = k.lon_widths_exact[4];
  EXPECT_NEAR(equator, 2000.0 / (kKmPerDegree * g.res_deg), 1e-12);
  EXPECT_NEAR(k.lon_widths_exact[0] / equator, 2.0, 1e-9);
  EXPECT_NEAR(k.lon_widths_exact[6] / equator, 2.0, 1e-9);
  for (int w : k.lon_widths) EXPECT_EQ(w % 2, 1);
  EXPECT_EQ(k.lat_width % 2, 1);
  EXPECT_GE(k.lon_widths[0], k.lon_widths[4]);
}

TEST(Normalize, LalasWidthsClampToGrid) {
  const GridSpec g = make_grid(5.625);
  const LalasKernel k = lalas_kernel(g, 5000.0);
  for (int w : k.lon_widths) {
    EXPECT_LE(w, 63);
    EXPECT_EQ(w % 2, 1);
  }
  EXPECT_EQ(k.lon_widths.front(), 63);  // near the pole the exact width exceeds the grid
  EXPECT_THROW(lalas_kernel(g, 0.0), Error);
}

TEST(Normalize, LalasMatchesOracleAndMapsConstantsToZero) {
  const GridSpec g = make_grid(11.25);
  const Field f = random_field(g, 12, 3.0, 1.0);
  const LalasKernel k = lalas_kernel(g, 3000.0);
  const Field got = standardize_lalas(f, 3000.0);
  const Field expect = oracle_local(f, k.lat_width, k.lon_widths);
  for (std::size_t c = 0; c < f.values.size(); ++c) EXPECT_NEAR(got.values[c], expect.values[c], 1e-9);
  for (double v : standardize_lalas(Field(g, -3.25), 3000.0).values) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, ModeDispatch) {
  const GridSpec g = make_grid(22.5);
  const Field f = random_field(g, 2);
  Normalization n;
  EXPECT_EQ(n.apply(f, "x").values, f.values);
  n.mode = Normalization::Mode::global;
  EXPECT_THROW(n.apply(f, "x"), Error);
  n.stats["x"] = VarStats{"x", 1.0, 2.0};
  EXPECT_EQ(n.apply(f, "x").values, standardize_global(f, n.stats["x"]).values);
  n.mode = Normalization::Mode::las;
  EXPECT_EQ(n.apply(f, "x").values, standardize_las(f, 3).values);
  n.mode = Normalization::Mode::lalas;
  EXPECT_EQ(n.apply(f, "x").values, standardize_lalas(f, 1000.0).values);
  EXPECT_EQ(parse_normalization_mode("lalas"), Normalization::Mode::lalas);
  EXPECT_EQ(to_string(Normalization::Mode::global), "global");
  EXPECT_THROW(parse_normalization_mode("zscore"), Error);
}

TEST(Normalize, StatsSidecarRoundTrip) {
  TempDir dir;
  const std::vector<VarStats> stats{
      {"a", 1.5, 2.25, {parse_timestamp("2016-04-01"), parse_timestamp("2017-12-31T23:59:59")}, 100},
      {"b", -3.0, 1.0, {parse_timestamp("2016-04-01"), parse_timestamp("2016-04-01")}, 4}};
  write_stats_sidecar(dir / "st", stats);
  const auto back = read_stats_sidecar(dir / "st");
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back[k].var, stats[k].var);
    EXPECT_EQ(back[k].mean, stats[k].mean);
    EXPECT_EQ(back[k].std, stats[k].std);
    EXPECT_EQ(back[k].count, stats[k].count);
    EXPECT_EQ(back[k].range.start, stats[k].range.start);
    EXPECT_EQ(back[k].range.end, stats[k].range.end);
  }
}
