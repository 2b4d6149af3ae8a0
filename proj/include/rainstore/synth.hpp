#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rainstore/grid.hpp"
#include "rainstore/store.hpp"
#include "rainstore/time.hpp"

namespace rainstore {

enum class GeneratorKind { constant, linear_in_lon, seasonal_sine, ar1_noise, mixed_exponential_rain };

std::string_view to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(std::string_view name);

struct SynthVariable {
  std::string name;
  VariableKind kind = VariableKind::temporal;
  GeneratorKind generator = GeneratorKind::constant;
  std::optional<int> level_hpa;
  std::string units;

  // constant: value. linear-in-lon: value + slope * lon_deg.
  double value = 0.0;
  double slope = 0.0;
  // seasonal-sine: mean + amplitude * cos(lat) * sin(2 pi (hours - phase_h) / period_h)
  double mean = 0.0;
  double amplitude = 1.0;
  double period_h = 8766.0;
  double phase_h = 0.0;
  // ar1-noise: per-pixel mean  mean + mean_amplitude * sin(lat) * cos(lon),
  // stationary noise with std sigma, lag-1 autocorrelation phi in time and
  // spatial_rho between longitude neighbours.
  double mean_amplitude = 0.0;
  double sigma = 1.0;
  double phi = 0.0;
  double spatial_rho = 0.0;
  // mixed-exponential-rain: overall class proportions; zero_fraction of all
  // pixels is exactly 0 (counted in the lowest class); within each class
  // values follow an exponential with the given scale truncated to the class.
  std::array<double, 4> proportions{0.9, 0.07, 0.02, 0.01};
  double zero_fraction = 0.5;
  std::array<double, 4> scales{0.5, 3.0, 10.0, 20.0};
  double max_value = 200.0;
};

struct SynthConfig {
  GridSpec grid = make_grid(5.625);
  Timestamp time_start = parse_timestamp("2016-01-01T00:00:00Z");
  std::int64_t time_step_s = 3600;
  std::int64_t n_steps = 24;
  std::uint64_t frames_per_file = 0;  // 0: one payload file per variable
  std::vector<SynthVariable> variables;
};

// Unknown keys and unknown generator kinds are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthConfig& config);

// Per-pixel mean of an ar1-noise variable.
std::vector<double> ar1_pixel_means(const GridSpec& grid, const SynthVariable& var);

// Writes the ingest directory (descriptors, payloads, dataset.json) and a
// truth.json sidecar with the generating parameters and expected moments.
// Variable streams are seeded from (seed, name), so adding a variable does
// not change the others.
void generate(const SynthConfig& config, std::uint64_t seed, const std::filesystem::path& out_dir);

nlohmann::json read_truth(const std::filesystem::path& dir);

}  // namespace rainstore
