#include "rainstore/synth.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "rainstore/error.hpp"
#include "rainstore/rng.hpp"

namespace rainstore {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::constant: return "constant";
    case GeneratorKind::linear_in_lon: return "linear-in-lon";
    case GeneratorKind::seasonal_sine: return "seasonal-sine";
    case GeneratorKind::ar1_noise: return "ar1-noise";
    case GeneratorKind::mixed_exponential_rain: return "mixed-exponential-rain";
  }
  return "?";
}

GeneratorKind parse_generator_kind(std::string_view name) {
  for (auto k : {GeneratorKind::constant, GeneratorKind::linear_in_lon, GeneratorKind::seasonal_sine,
                 GeneratorKind::ar1_noise, GeneratorKind::mixed_exponential_rain}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::invalid_argument, "unknown generator kind '" + std::string(name) + "'");
}

namespace {

const std::set<std::string>& params_of(GeneratorKind kind) {
  static const std::set<std::string> constant{"value"};
  static const std::set<std::string> linear{"value", "slope"};
  static const std::set<std::string> seasonal{"mean", "amplitude", "period_h", "phase_h"};
  static const std::set<std::string> ar1{"mean", "mean_amplitude", "sigma", "phi", "spatial_rho"};
  static const std::set<std::string> rain{"proportions", "zero_fraction", "scales", "max_value"};
  switch (kind) {
    case GeneratorKind::constant: return constant;
    case GeneratorKind::linear_in_lon: return linear;
    case GeneratorKind::seasonal_sine: return seasonal;
    case GeneratorKind::ar1_noise: return ar1;
    case GeneratorKind::mixed_exponential_rain: return rain;
  }
  return constant;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::format, where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::format, where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::format, where + ": bad value for '" + key + "'");
  }
}

void validate(const SynthVariable& v) {
  const std::string where = "variable '" + v.name + "'";
  if (v.name.empty()) throw Error(ErrorCode::format, "variable without a name");
  switch (v.generator) {
    case GeneratorKind::seasonal_sine:
      if (!(v.period_h > 0.0)) throw Error(ErrorCode::invalid_argument, where + ": period_h must be > 0");
      break;
    case GeneratorKind::ar1_noise:
      if (!(v.sigma >= 0.0)) throw Error(ErrorCode::invalid_argument, where + ": sigma must be >= 0");
      if (!(std::abs(v.phi) < 1.0)) throw Error(ErrorCode::invalid_argument, where + ": |phi| must be < 1");
      if (!(std::abs(v.spatial_rho) < 1.0)) {
        throw Error(ErrorCode::invalid_argument, where + ": |spatial_rho| must be < 1");
      }
      break;
    case GeneratorKind::mixed_exponential_rain: {
      double sum = 0.0;
      for (double p : v.proportions) {
        if (!(p >= 0.0)) throw Error(ErrorCode::invalid_argument, where + ": proportions must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::invalid_argument, where + ": proportions must sum to 1");
      if (!(v.zero_fraction >= 0.0 && v.zero_fraction <= v.proportions[0])) {
        throw Error(ErrorCode::invalid_argument, where + ": zero_fraction must lie in [0, proportions[0]]");
      }
      for (double s : v.scales) {
        if (!(s > 0.0)) throw Error(ErrorCode::invalid_argument, where + ": scales must be > 0");
      }
      if (!(v.max_value > 50.0)) throw Error(ErrorCode::invalid_argument, where + ": max_value must exceed 50");
      break;
    }
    default:
      break;
  }
}

}  // namespace

SynthConfig synth_config_from_json(const json& j) {
  check_keys(j, {"grid", "time_start", "time_step_s", "n_steps", "frames_per_file", "variables", "seed"},
             "synth config");
  SynthConfig c;
  if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
  if (j.contains("time_start")) c.time_start = parse_timestamp(j.at("time_start").get<std::string>());
  read_opt(j, "time_step_s", c.time_step_s, "synth config");
  read_opt(j, "n_steps", c.n_steps, "synth config");
  read_opt(j, "frames_per_file", c.frames_per_file, "synth config");
  if (c.n_steps < 1 || c.time_step_s <= 0) {
    throw Error(ErrorCode::invalid_argument, "synth config: n_steps must be >= 1 and time_step_s > 0");
  }
  if (!j.contains("variables") || !j.at("variables").is_array() || j.at("variables").empty()) {
    throw Error(ErrorCode::format, "synth config: 'variables' must be a non-empty array");
  }
  std::set<std::string> seen;
  for (const auto& vj : j.at("variables")) {
    SynthVariable v;
    if (!vj.is_object() || !vj.contains("generator") || !vj.contains("name")) {
      throw Error(ErrorCode::format, "synth config: each variable needs 'name' and 'generator'");
    }
    v.name = vj.at("name").get<std::string>();
    const std::string where = "variable '" + v.name + "'";
    v.generator = parse_generator_kind(vj.at("generator").get<std::string>());
    std::set<std::string> allowed = params_of(v.generator);
    allowed.insert({"name", "generator", "kind", "level_hpa", "units"});
    check_keys(vj, allowed, where);
    if (vj.contains("kind")) {
      const std::string kind = vj.at("kind").get<std::string>();
      if (kind == "static") {
        v.kind = VariableKind::static_field;
      } else if (kind != "temporal") {
        throw Error(ErrorCode::format, where + ": kind must be 'temporal' or 'static'");
      }
    }
    if (vj.contains("level_hpa") && !vj.at("level_hpa").is_null()) v.level_hpa = vj.at("level_hpa").get<int>();
    read_opt(vj, "units", v.units, where);
    read_opt(vj, "value", v.value, where);
    read_opt(vj, "slope", v.slope, where);
    read_opt(vj, "mean", v.mean, where);
    read_opt(vj, "amplitude", v.amplitude, where);
    read_opt(vj, "period_h", v.period_h, where);
    read_opt(vj, "phase_h", v.phase_h, where);
    read_opt(vj, "mean_amplitude", v.mean_amplitude, where);
    read_opt(vj, "sigma", v.sigma, where);
    read_opt(vj, "phi", v.phi, where);
    read_opt(vj, "spatial_rho", v.spatial_rho, where);
    read_opt(vj, "proportions", v.proportions, where);
    read_opt(vj, "zero_fraction", v.zero_fraction, where);
    read_opt(vj, "scales", v.scales, where);
    read_opt(vj, "max_value", v.max_value, where);
    validate(v);
    if (!seen.insert(v.name).second) throw Error(ErrorCode::format, "synth config: duplicate variable " + v.name);
    c.variables.push_back(std::move(v));
  }
  return c;
}

json to_json(const SynthConfig& c) {
  json vars = json::array();
  for (const auto& v : c.variables) {
    json vj{{"name", v.name},
            {"generator", to_string(v.generator)},
            {"kind", v.kind == VariableKind::static_field ? "static" : "temporal"},
            {"level_hpa", v.level_hpa ? json(*v.level_hpa) : json(nullptr)},
            {"units", v.units}};
    const json all{{"value", v.value},
                   {"slope", v.slope},
                   {"mean", v.mean},
                   {"amplitude", v.amplitude},
                   {"period_h", v.period_h},
                   {"phase_h", v.phase_h},
                   {"mean_amplitude", v.mean_amplitude},
                   {"sigma", v.sigma},
                   {"phi", v.phi},
                   {"spatial_rho", v.spatial_rho},
                   {"proportions", v.proportions},
                   {"zero_fraction", v.zero_fraction},
                   {"scales", v.scales},
                   {"max_value", v.max_value}};
    for (const auto& key : params_of(v.generator)) vj[key] = all.at(key);
    vars.push_back(vj);
  }
  return {{"grid", grid_to_json(c.grid)},
          {"time_start", format_timestamp(c.time_start)},
          {"time_step_s", c.time_step_s},
          {"n_steps", c.n_steps},
          {"frames_per_file", c.frames_per_file},
          {"variables", vars}};
}

std::vector<double> ar1_pixel_means(const GridSpec& grid, const SynthVariable& v) {
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<double> out(grid.cells());
  for (int i = 0; i < grid.n_lat; ++i) {
    for (int j = 0; j < grid.n_lon; ++j) {
      out[grid.index(i, j)] =
          v.mean + v.mean_amplitude * std::sin(grid.lat_centers[i] * deg) * std::cos(grid.lon_centers[j] * deg);
    }
  }
  return out;
}

namespace {

constexpr std::array<double, 5> kClassBounds{0.0, 2.0, 10.0, 50.0, 0.0};  // last replaced by max_value

class Generator {
 public:
  Generator(const SynthConfig& c, const SynthVariable& v, std::uint64_t seed)
      : c_(c), v_(v), rng_(derive_seed(seed, "synth/" + v.name)), cells_(c.grid.cells()) {
    if (v.generator == GeneratorKind::ar1_noise) {
      means_ = ar1_pixel_means(c.grid, v);
      state_.assign(cells_, 0.0);
    }
  }

  std::vector<float> frame(std::int64_t t) {
    constexpr double deg = std::numbers::pi / 180.0;
    const GridSpec& g = c_.grid;
    std::vector<float> out(cells_);
    switch (v_.generator) {
      case GeneratorKind::constant:
        std::fill(out.begin(), out.end(), static_cast<float>(v_.value));
        break;
      case GeneratorKind::linear_in_lon:
        for (int i = 0; i < g.n_lat; ++i) {
          for (int j = 0; j < g.n_lon; ++j) {
            out[g.index(i, j)] = static_cast<float>(v_.value + v_.slope * g.lon_centers[j]);
          }
        }
        break;
      case GeneratorKind::seasonal_sine: {
        const Timestamp ts = c_.time_start + Seconds(c_.time_step_s * t);
        const double hours = static_cast<double>(ts.time_since_epoch().count()) / 3600.0;
        const double s = std::sin(2.0 * std::numbers::pi * (hours - v_.phase_h) / v_.period_h);
        for (int i = 0; i < g.n_lat; ++i) {
          const float value = static_cast<float>(v_.mean + v_.amplitude * std::cos(g.lat_centers[i] * deg) * s);
          for (int j = 0; j < g.n_lon; ++j) out[g.index(i, j)] = value;
        }
        break;
      }
      case GeneratorKind::ar1_noise: {
        const double innovation = t == 0 ? 1.0 : std::sqrt(1.0 - v_.phi * v_.phi);
        const double lateral = std::sqrt(1.0 - v_.spatial_rho * v_.spatial_rho);
        for (int i = 0; i < g.n_lat; ++i) {
          double z = 0.0;
          for (int j = 0; j < g.n_lon; ++j) {
            const double w = standard_normal(rng_);
            z = j == 0 ? w : v_.spatial_rho * z + lateral * w;
            const std::size_t k = g.index(i, j);
            state_[k] = (t == 0 ? 0.0 : v_.phi * state_[k]) + innovation * v_.sigma * z;
            out[k] = static_cast<float>(means_[k] + state_[k]);
          }
        }
        break;
      }
      case GeneratorKind::mixed_exponential_rain:
        for (std::size_t k = 0; k < cells_; ++k) out[k] = rain_value();
        break;
    }
    return out;
  }

 private:
  float rain_value() {
    const double u = uniform01(rng_);
    if (u < v_.zero_fraction) return 0.0f;
    int cls = 0;
    double acc = v_.proportions[0];
    while (cls < 3 && u >= acc) acc += v_.proportions[++cls];
    const double lo = kClassBounds[cls];
    const double hi = cls == 3 ? v_.max_value : kClassBounds[cls + 1];
    const double s = v_.scales[cls];
    const double mass = -std::expm1(-(hi - lo) / s);
    for (;;) {
      const double x = lo - s * std::log1p(-uniform01(rng_) * mass);
      float f = static_cast<float>(x);
      if (f >= static_cast<float>(hi)) f = std::nextafter(static_cast<float>(hi), 0.0f);
      if (f < static_cast<float>(lo)) f = static_cast<float>(lo);
      if (f > 0.0f) return f;  // keep the zero share exactly at zero_fraction
    }
  }

  const SynthConfig& c_;
  const SynthVariable& v_;
  Engine rng_;
  std::size_t cells_;
  std::vector<double> means_;
  std::vector<double> state_;
};

void write_floats(std::ofstream& out, const std::vector<float>& frame) {
  static_assert(std::endian::native == std::endian::little, "payload writer assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size() * sizeof(float)));
  if (!out) throw Error(ErrorCode::io, "payload write failed");
}

json truth_of(const SynthConfig& c, const SynthVariable& v) {
  json t{{"generator", to_string(v.generator)}};
  switch (v.generator) {
    case GeneratorKind::constant:
      t["value"] = v.value;
      t["mean"] = v.value;
      t["std"] = 0.0;
      break;
    case GeneratorKind::linear_in_lon:
      t["value"] = v.value;
      t["slope"] = v.slope;
      t["std"] = 0.0;
      break;
    case GeneratorKind::seasonal_sine:
      t["mean"] = v.mean;
      t["amplitude"] = v.amplitude;
      t["period_h"] = v.period_h;
      t["phase_h"] = v.phase_h;
      break;
    case GeneratorKind::ar1_noise:
      t["mean"] = v.mean;
      t["mean_amplitude"] = v.mean_amplitude;
      t["pixel_mean"] = ar1_pixel_means(c.grid, v);
      t["std"] = v.sigma;
      t["phi"] = v.phi;
      t["spatial_rho"] = v.spatial_rho;
      break;
    case GeneratorKind::mixed_exponential_rain:
      t["proportions"] = v.proportions;
      t["zero_fraction"] = v.zero_fraction;
      t["scales"] = v.scales;
      t["max_value"] = v.max_value;
      t["class_edges"] = {2.0, 10.0, 50.0};
      break;
  }
  return t;
}

}  // namespace

void generate(const SynthConfig& config, std::uint64_t seed, const fs::path& out_dir) {
  if (config.variables.empty()) throw Error(ErrorCode::invalid_argument, "synth config has no variables");
  for (const auto& v : config.variables) validate(v);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());

  json order = json::array();
  json truth_vars = json::object();
  for (const auto& v : config.variables) {
    IngestVariable iv;
    iv.spec.name = v.name;
    iv.spec.kind = v.kind;
    iv.spec.level_hpa = v.level_hpa;
    iv.spec.units = v.units;
    iv.grid = config.grid;
    iv.time_start = config.time_start;
    iv.time_step_s = config.time_step_s;
    iv.n_steps = v.kind == VariableKind::static_field ? 1 : config.n_steps;

    Generator gen(config, v, seed);
    const std::uint64_t per_file = config.frames_per_file == 0 ? static_cast<std::uint64_t>(iv.n_steps)
                                                               : config.frames_per_file;
    std::ofstream out;
    for (std::int64_t t = 0; t < iv.n_steps; ++t) {
      if (static_cast<std::uint64_t>(t) % per_file == 0) {
        if (out.is_open()) out.close();
        const std::string name = config.frames_per_file == 0
                                     ? v.name + ".f32"
                                     : v.name + "." + std::to_string(static_cast<std::uint64_t>(t) / per_file) + ".f32";
        iv.files.push_back(out_dir / name);
        out.open(iv.files.back(), std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io, "cannot write " + iv.files.back().string());
      }
      write_floats(out, gen.frame(t));
    }
    out.close();
    if (out.fail()) throw Error(ErrorCode::io, "payload write failed for " + v.name);
    write_ingest_descriptor(out_dir, iv);
    order.push_back(v.name);
    truth_vars[v.name] = truth_of(config, v);
  }

  auto write_json = [](const fs::path& p, const json& j) {
    std::ofstream f(p);
    f << j.dump(2) << '\n';
    if (!f) throw Error(ErrorCode::io, "cannot write " + p.string());
  };
  write_json(out_dir / "dataset.json", {{"variables", order}});
  write_json(out_dir / "truth.json", {{"seed", seed},
                                      {"n_steps", config.n_steps},
                                      {"grid", grid_to_json(config.grid)},
                                      {"variables", truth_vars}});
}

json read_truth(const fs::path& dir) {
  std::ifstream in(dir / "truth.json");
  if (!in) throw Error(ErrorCode::io, "no truth.json in " + dir.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, "truth.json: " + std::string(e.what()));
  }
}

}  // namespace rainstore
