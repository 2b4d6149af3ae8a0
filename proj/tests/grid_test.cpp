#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "rainstore/error.hpp"
#include "rainstore/grid.hpp"
#include "rainstore/rng.hpp"
#include "test_support.hpp"

using namespace rainstore;
using rainstore::testing::oracle_bilinear;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

Field random_field(const GridSpec& g, std::uint64_t seed) {
  Engine rng(seed);
  Field f(g, 0.0);
  for (double& v : f.values) v = 1.0 + uniform01(rng);
  return f;
}

}  // namespace

TEST(Grid, MakeGridCenters) {
  const GridSpec g = make_grid(5.625);
  EXPECT_EQ(g.n_lat, 32);
  EXPECT_EQ(g.n_lon, 64);
  EXPECT_DOUBLE_EQ(g.lat_centers.front(), 90.0 - 5.625 / 2);
  EXPECT_DOUBLE_EQ(g.lat_centers.back(), -90.0 + 5.625 / 2);
  EXPECT_DOUBLE_EQ(g.lon_centers.front(), 5.625 / 2);
  EXPECT_DOUBLE_EQ(g.lon_centers.back(), 360.0 - 5.625 / 2);
  EXPECT_TRUE(g.is_regular_global());
  EXPECT_EQ(make_grid(90.0).n_lat, 2);
  EXPECT_EQ(make_grid(0.25).n_lon, 1440);
}

TEST(Grid, RejectsNonDividingResolution) {
  EXPECT_THROW(make_grid(7.0), Error);
  EXPECT_THROW(make_grid(0.0), Error);
  EXPECT_THROW(make_grid(-1.0), Error);
  try {
    make_grid(100.0);  // divides 360? no; 180? no
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(Grid, GridFromCentersValidates) {
  EXPECT_NO_THROW(grid_from_centers({10, 0, -10}, {0, 20, 40}));
  EXPECT_THROW(grid_from_centers({0, 10}, {0, 20}), Error);
  EXPECT_THROW(grid_from_centers({10, 0}, {20, 0}), Error);
  EXPECT_THROW(grid_from_centers({90, 0}, {0, 20}), Error);
}

TEST(Grid, LatitudeWeightsAverageToOne) {
  for (double res : {5.625, 11.25, 90.0, 2.8125, 1.40625}) {
    const auto w = latitude_weights(make_grid(res));
    double sum = 0.0;
    for (double x : w) sum += x;
    EXPECT_NEAR(sum / static_cast<double>(w.size()), 1.0, 1e-12) << res;
  }
}

TEST(Grid, LatitudeWeightsFollowCosine) {
  const GridSpec g = make_grid(11.25);
  const auto w = latitude_weights(g);
  for (int i = 0; i < g.n_lat; ++i) {
    EXPECT_NEAR(w[i] / w[0], std::cos(g.lat_centers[i] * std::numbers::pi / 180) /
                                 std::cos(g.lat_centers[0] * std::numbers::pi / 180),
                1e-12);
  }
  const auto two = latitude_weights(make_grid(90.0));
  EXPECT_NEAR(two[0], 1.0, 1e-15);
  EXPECT_NEAR(two[1], 1.0, 1e-15);
}

TEST(Grid, RegridConstantFieldIsConstant) {
  const Field f(make_grid(0.25), 3.25);
  const Field out = regrid_bilinear(f, make_grid(5.625));
  for (double v : out.values) EXPECT_NEAR(v, 3.25, 1e-6);
}

TEST(Grid, RegridLonAffineFieldIsExact) {
  const GridSpec src = make_grid(0.25);
  const GridSpec dst = make_grid(5.625);
  Field f(src, 0.0);
  for (int i = 0; i < src.n_lat; ++i) {
    for (int j = 0; j < src.n_lon; ++j) f.at(i, j) = 4.0 + 0.01 * src.lon_centers[j];
  }
  const Field out = regrid_bilinear(f, dst);
  for (int i = 0; i < dst.n_lat; ++i) {
    for (int j = 0; j < dst.n_lon; ++j) EXPECT_NEAR(out.at(i, j), 4.0 + 0.01 * dst.lon_centers[j], 1e-6);
  }
}

TEST(Grid, RegridMatchesOracleOnRandomFields) {
  const std::vector<std::pair<GridSpec, GridSpec>> cases{
      {make_grid(1.40625), make_grid(5.625)},
      {make_grid(5.625), make_grid(2.8125)},  // upsampling, exercises the wrap
      {make_grid(11.25), make_grid(5.625)},
      {grid_from_centers({40, 33, 20, 5, -1}, {10, 30, 100, 200, 330}), make_grid(11.25)},
  };
  std::uint64_t seed = 1;
  for (const auto& [src, dst] : cases) {
    const Field f = random_field(src, seed++);
    const Field out = regrid_bilinear(f, dst);
    for (int i = 0; i < dst.n_lat; ++i) {
      for (int j = 0; j < dst.n_lon; ++j) {
        const double expect = oracle_bilinear(f, dst.lat_centers[i], dst.lon_centers[j]);
        EXPECT_NEAR(out.at(i, j), expect, 1e-6 * std::abs(expect));
      }
    }
  }
}

TEST(Grid, RegridSameGridIsIdentity) {
  const Field f = random_field(make_grid(11.25), 9);
  const Field out = regrid_bilinear(f, make_grid(11.25));
  for (std::size_t k = 0; k < f.values.size(); ++k) EXPECT_DOUBLE_EQ(out.values[k], f.values[k]);
}

TEST(Grid, RegridNanPropagatesOnlyThroughWeightedCorners) {
  const GridSpec src = make_grid(11.25);
  Field f(src, 1.0);
  f.at(5, 5) = kNan;
  // identical grid: only the cell itself has weight
  const Field same = regrid_bilinear(f, src);
  int nans = 0;
  for (double v : same.values) nans += std::isnan(v) ? 1 : 0;
  EXPECT_EQ(nans, 1);
  EXPECT_TRUE(std::isnan(same.at(5, 5)));
  // upsampling spreads the NaN to every neighbouring destination cell
  const Field up = regrid_bilinear(f, make_grid(5.625));
  EXPECT_TRUE(std::isnan(up.at(10, 10)) || std::isnan(up.at(11, 11)));
  EXPECT_FALSE(std::isnan(up.at(0, 0)));
}

TEST(Grid, MaxPoolTakesBlockMaxima) {
  const GridSpec g = make_grid(45.0);  // 4 x 8
  Field f(g, 0.0);
  for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = static_cast<double>((k * 7) % 11);
  const Field out = downscale_maxpool(f, 2);
  EXPECT_EQ(out.grid, make_grid(90.0));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 4; ++j) {
      double m = -1;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) m = std::max(m, f.at(2 * i + a, 2 * j + b));
      }
      EXPECT_EQ(out.at(i, j), m);
    }
  }
}

TEST(Grid, MaxPoolNanHandlingAndIdentity) {
  const GridSpec g = make_grid(45.0);
  Field f(g, 1.0);
  f.at(0, 0) = kNan;
  f.at(0, 1) = 5.0;
  f.at(1, 0) = kNan;
  f.at(1, 1) = kNan;
  for (int a = 0; a < 2; ++a) {
    for (int b = 2; b < 4; ++b) f.at(a, b) = kNan;
  }
  const Field out = downscale_maxpool(f, 2);
  EXPECT_EQ(out.at(0, 0), 5.0);
  EXPECT_TRUE(std::isnan(out.at(0, 1)));
  const Field same = downscale_maxpool(f, 1);
  EXPECT_EQ(same.grid, g);
  EXPECT_THROW(downscale_maxpool(f, 3), Error);
  EXPECT_THROW(downscale_maxpool(f, 0), Error);
}

TEST(Grid, FieldLengthChecked) {
  EXPECT_THROW(Field(make_grid(90.0), std::vector<double>(3, 0.0)), Error);
}
