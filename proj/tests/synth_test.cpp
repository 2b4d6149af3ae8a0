#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include "rainstore/error.hpp"
#include "rainstore/sampler.hpp"
#include "rainstore/synth.hpp"
#include "test_support.hpp"

using namespace rainstore;
using rainstore::testing::synth_var;
using rainstore::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every regular file under dir keyed by its relative name.
std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

SynthConfig small_config() {
  SynthConfig c;
  c.grid = make_grid(22.5);
  c.n_steps = 12;
  SynthVariable k = synth_var("k", GeneratorKind::constant);
  k.value = 3.5;
  SynthVariable rain = synth_var("tp", GeneratorKind::mixed_exponential_rain);
  SynthVariable noise = synth_var("n", GeneratorKind::ar1_noise);
  noise.phi = 0.5;
  c.variables = {k, rain, noise};
  return c;
}

}  // namespace

TEST(Synth, ConstantAndLinearGenerators) {
  TempDir dir;
  SynthConfig c;
  c.grid = make_grid(45.0);
  c.n_steps = 5;
  SynthVariable k = synth_var("k", GeneratorKind::constant);
  k.value = -2.25;
  SynthVariable lin = synth_var("lin", GeneratorKind::linear_in_lon);
  lin.value = 1.0;
  lin.slope = 0.5;
  lin.kind = VariableKind::static_field;
  c.variables = {k, lin};
  const Datastore s = rainstore::testing::synth_store(dir.path(), c, 1);
  for (std::int64_t t = 0; t < 5; ++t) {
    for (float v : s.frame_view("k", t)) EXPECT_EQ(v, -2.25f);
  }
  EXPECT_TRUE(s.variable("lin").is_static());
  const Field f = s.read_frame("lin", 0);
  for (int i = 0; i < c.grid.n_lat; ++i) {
    for (int j = 0; j < c.grid.n_lon; ++j) EXPECT_EQ(f.at(i, j), static_cast<float>(1.0 + 0.5 * c.grid.lon_centers[j]));
  }
}

TEST(Synth, SeasonalSineFollowsFormula) {
  TempDir dir;
  SynthConfig c;
  c.grid = make_grid(45.0);
  c.n_steps = 48;
  c.time_start = parse_timestamp("2016-03-01");
  SynthVariable v = synth_var("s", GeneratorKind::seasonal_sine);
  v.mean = 280.0;
  v.amplitude = 10.0;
  v.period_h = 24.0;
  v.phase_h = 6.0;
  c.variables = {v};
  const Datastore s = rainstore::testing::synth_store(dir.path(), c, 1);
  const double hours0 = static_cast<double>(c.time_start.time_since_epoch().count()) / 3600.0;
  for (std::int64_t t = 0; t < 48; t += 7) {
    const Field f = s.read_frame("s", t);
    for (int i = 0; i < c.grid.n_lat; ++i) {
      const double expect = 280.0 + 10.0 * std::cos(c.grid.lat_centers[i] * std::numbers::pi / 180) *
                                        std::sin(2 * std::numbers::pi * (hours0 + t - 6.0) / 24.0);
      EXPECT_NEAR(f.at(i, 3), expect, 1e-4);
    }
  }
}

TEST(Synth, FixedSeedIsByteIdentical) {
  TempDir a, b, c;
  generate(small_config(), 77, a.path());
  generate(small_config(), 77, b.path());
  generate(small_config(), 78, c.path());
  const auto ca = dir_contents(a.path());
  const auto cb = dir_contents(b.path());
  ASSERT_EQ(ca.size(), cb.size());
  for (const auto& [name, bytes] : ca) EXPECT_EQ(bytes, cb.at(name)) << name;
  EXPECT_NE(slurp(a / "tp.f32"), slurp(c / "tp.f32"));
  EXPECT_EQ(slurp(a / "k.f32"), slurp(c / "k.f32"));
}

TEST(Synth, VariableStreamsAreIndependentOfEachOther) {
  TempDir a, b;
  SynthConfig one = small_config();
  generate(one, 5, a.path());
  one.variables.erase(one.variables.begin());  // drop the constant
  generate(one, 5, b.path());
  EXPECT_EQ(slurp(a / "tp.f32"), slurp(b / "tp.f32"));
  EXPECT_EQ(slurp(a / "n.f32"), slurp(b / "n.f32"));
}

TEST(Synth, SplitPayloadFiles) {
  TempDir dir;
  SynthConfig c = small_config();
  c.frames_per_file = 5;
  generate(c, 2, dir.path());
  EXPECT_TRUE(fs::exists(dir / "tp.0.f32"));
  EXPECT_TRUE(fs::exists(dir / "tp.2.f32"));
  EXPECT_EQ(fs::file_size(dir / "tp.2.f32"), 2u * 128 * 4);
  TempDir whole;
  generate(small_config(), 2, whole.path());
  EXPECT_EQ(slurp(dir / "tp.0.f32") + slurp(dir / "tp.1.f32") + slurp(dir / "tp.2.f32"), slurp(whole / "tp.f32"));
}

TEST(Synth, RainClassProportionsWithinThreeSigma) {
  TempDir dir;
  SynthConfig c;
  c.grid = make_grid(5.625);
  c.n_steps = 100;
  c.variables = {synth_var("tp", GeneratorKind::mixed_exponential_rain)};
  const Datastore s = rainstore::testing::synth_store(dir.path(), c, 31);
  const ClassBinning binning;
  std::array<double, 4> counts{};
  double zeros = 0, n = 0;
  for (std::int64_t t = 0; t < c.n_steps; ++t) {
    for (float v : s.frame_view("tp", t)) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LT(v, 200.0f);
      ++counts[static_cast<int>(binning.classify(v))];
      zeros += v == 0.0f;
      ++n;
    }
  }
  const std::array<double, 4> p{0.9, 0.07, 0.02, 0.01};
  for (int k = 0; k < 4; ++k) {
    EXPECT_GT(counts[k], 0.0);
    EXPECT_NEAR(counts[k] / n, p[k], 3.0 * std::sqrt(p[k] * (1 - p[k]) / n)) << k;
  }
  EXPECT_NEAR(zeros / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(Synth, TruthSidecarMatchesAr1Statistics) {
  TempDir dir;
  SynthConfig c;
  c.grid = make_grid(11.25);
  c.n_steps = 3000;
  SynthVariable v = synth_var("x", GeneratorKind::ar1_noise);
  v.mean = 10.0;
  v.mean_amplitude = 4.0;
  v.sigma = 2.0;
  v.phi = 0.6;
  v.spatial_rho = 0.4;
  c.variables = {v};
  const Datastore s = rainstore::testing::synth_store(dir.path(), c, 13);
  const auto truth = read_truth(dir / "store_ingest");
  EXPECT_EQ(truth["seed"], 13);
  const auto& t = truth["variables"]["x"];
  EXPECT_EQ(t["generator"], "ar1-noise");
  const auto pixel_mean = t["pixel_mean"].get<std::vector<double>>();
  const double sigma = t["std"].get<double>();
  const double phi = t["phi"].get<double>();
  ASSERT_EQ(pixel_mean.size(), c.grid.cells());

  const std::size_t cells = c.grid.cells();
  std::vector<double> sum(cells, 0), sq(cells, 0);
  double lag = 0, lag_n = 0, lateral = 0, lateral_n = 0;
  std::vector<float> prev;
  for (std::int64_t k = 0; k < c.n_steps; ++k) {
    const auto f = s.frame_view("x", k);
    for (std::size_t i = 0; i < cells; ++i) {
      const double d = f[i] - pixel_mean[i];
      sum[i] += d;
      sq[i] += d * d;
      if (!prev.empty()) {
        lag += d * (prev[i] - pixel_mean[i]);
        ++lag_n;
      }
      if (i % c.grid.n_lon != 0) {
        lateral += d * (f[i - 1] - pixel_mean[i - 1]);
        ++lateral_n;
      }
    }
    prev.assign(f.begin(), f.end());
  }
  // Standard error of a time mean under AR(1): sigma * sqrt((1 + phi) / ((1 - phi) n)).
  const double se = sigma * std::sqrt((1 + phi) / ((1 - phi) * c.n_steps));
  double var_total = 0;
  for (std::size_t i = 0; i < cells; ++i) {
    EXPECT_NEAR(sum[i] / c.n_steps, 0.0, 5 * se) << i;
    var_total += sq[i] / c.n_steps;
  }
  EXPECT_NEAR(std::sqrt(var_total / cells), sigma, 0.02 * sigma);
  EXPECT_NEAR(lag / lag_n / (sigma * sigma), phi, 0.02);
  EXPECT_NEAR(lateral / lateral_n / (sigma * sigma), 0.4, 0.02);
}

TEST(Synth, ConfigJsonRoundTripAndErrors) {
  const SynthConfig c = small_config();
  const SynthConfig back = synth_config_from_json(to_json(c));
  ASSERT_EQ(back.variables.size(), 3u);
  EXPECT_EQ(back.variables[0].value, 3.5);
  EXPECT_EQ(back.variables[2].phi, 0.5);
  EXPECT_EQ(back.n_steps, 12);

  nlohmann::json j = to_json(c);
  j["variables"][0]["generator"] = "perlin";
  EXPECT_THROW(synth_config_from_json(j), Error);
  j = to_json(c);
  j["variables"][0]["sigma"] = 1.0;  // not a constant parameter
  EXPECT_THROW(synth_config_from_json(j), Error);
  j = to_json(c);
  j["colour"] = "blue";
  EXPECT_THROW(synth_config_from_json(j), Error);
  j = to_json(c);
  j["variables"][1]["proportions"] = {0.5, 0.2, 0.2, 0.2};
  EXPECT_THROW(synth_config_from_json(j), Error);
  EXPECT_THROW(parse_generator_kind("gaussian"), Error);
  EXPECT_EQ(parse_generator_kind("mixed-exponential-rain"), GeneratorKind::mixed_exponential_rain);
  TempDir dir;
  EXPECT_THROW(read_truth(dir.path()), Error);
}
