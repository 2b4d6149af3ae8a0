#include "rainstore/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "rainstore/error.hpp"

namespace rainstore {

using nlohmann::json;

namespace {

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double floor_std(double s) { return s < kStdFloor ? 1.0 : s; }

int nearest_odd(double x) {
  const double r = std::round(x);
  int w = static_cast<int>(r);
  if (w % 2 == 0) w += (x >= r) ? 1 : -1;
  return std::max(w, 1);
}

int largest_odd_at_most(int n) { return n % 2 == 1 ? n : n - 1; }

// Standardize each cell against the non-NaN values of its neighborhood. The
// longitude window of row i spans lon_widths[i] cells with wraparound; the
// latitude window spans lat_width rows clipped to the grid.
Field local_standardize(const Field& field, int lat_width, const std::vector<int>& lon_widths) {
  const GridSpec& g = field.grid;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Field out(g, nan, field.units);
  const int half_lat = lat_width / 2;
  std::vector<double> window;
  for (int i = 0; i < g.n_lat; ++i) {
    const int half_lon = lon_widths[i] / 2;
    const int i_lo = std::max(0, i - half_lat);
    const int i_hi = std::min(g.n_lat - 1, i + half_lat);
    for (int j = 0; j < g.n_lon; ++j) {
      const double center = field.at(i, j);
      if (std::isnan(center)) continue;
      window.clear();
      for (int r = i_lo; r <= i_hi; ++r) {
        for (int d = -half_lon; d <= half_lon; ++d) {
          const int c = ((j + d) % g.n_lon + g.n_lon) % g.n_lon;
          const double v = field.at(r, c);
          if (!std::isnan(v)) window.push_back(v);
        }
      }
      // shift by the center value so a constant neighborhood gives exactly 0
      double shifted = 0.0;
      for (double v : window) shifted += v - center;
      const double n = static_cast<double>(window.size());
      const double mean = center + shifted / n;
      double ss = 0.0;
      for (double v : window) ss += (v - mean) * (v - mean);
      const double sd = floor_std(std::sqrt(ss / n));
      out.at(i, j) = (center - mean) / sd;
    }
  }
  return out;
}

}  // namespace

VarStats global_stats(const Datastore& store, std::string_view var, const TimeRange& range) {
  const VariableSpec& spec = store.variable(var);
  std::int64_t first = 0, last = 1;
  if (!spec.is_static()) {
    if (range.empty()) throw Error(ErrorCode::invalid_argument, "empty statistics range");
    std::tie(first, last) = store.header().frames_in(range);
    if (first >= last) {
      throw Error(ErrorCode::insufficient_data, "no frames of '" + spec.name + "' in statistics range");
    }
  }

  CompensatedSum sum;
  std::uint64_t count = 0;
  for (std::int64_t t = first; t < last; ++t) {
    for (float v : store.frame_view(var, t)) {
      if (std::isnan(v)) continue;
      sum.add(v);
      ++count;
    }
  }
  if (count == 0) {
    throw Error(ErrorCode::insufficient_data, "all values of '" + spec.name + "' are NaN in range");
  }
  const double mean = sum.value() / static_cast<double>(count);

  CompensatedSum dev, dev2;
  for (std::int64_t t = first; t < last; ++t) {
    for (float v : store.frame_view(var, t)) {
      if (std::isnan(v)) continue;
      const double d = static_cast<double>(v) - mean;
      dev.add(d);
      dev2.add(d * d);
    }
  }
  const double n = static_cast<double>(count);
  const double variance = std::max(0.0, (dev2.value() - dev.value() * dev.value() / n) / n);

  VarStats stats;
  stats.var = spec.name;
  stats.mean = mean;
  stats.std = floor_std(std::sqrt(variance));
  stats.range = spec.is_static() ? TimeRange{store.header().time_start, store.header().time_start} : range;
  stats.count = count;
  return stats;
}

VarStats field_stats(const Field& field, std::string_view var) {
  CompensatedSum sum;
  std::uint64_t count = 0;
  for (double v : field.values) {
    if (std::isnan(v)) continue;
    sum.add(v);
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::insufficient_data, "all values of '" + std::string(var) + "' are NaN");
  const double mean = sum.value() / static_cast<double>(count);
  CompensatedSum dev, dev2;
  for (double v : field.values) {
    if (std::isnan(v)) continue;
    dev.add(v - mean);
    dev2.add((v - mean) * (v - mean));
  }
  const double n = static_cast<double>(count);
  VarStats stats;
  stats.var = std::string(var);
  stats.mean = mean;
  stats.std = floor_std(std::sqrt(std::max(0.0, (dev2.value() - dev.value() * dev.value() / n) / n)));
  stats.count = count;
  return stats;
}

Field standardize_global(const Field& field, const VarStats& stats) {
  if (!std::isfinite(stats.mean) || !std::isfinite(stats.std) || stats.std <= 0.0) {
    throw Error(ErrorCode::invalid_argument, "non-finite statistics for '" + stats.var + "'");
  }
  Field out = field;
  for (double& v : out.values) v = (v - stats.mean) / stats.std;
  return out;
}

Field destandardize_global(const Field& field, const VarStats& stats) {
  Field out = field;
  for (double& v : out.values) v = v * stats.std + stats.mean;
  return out;
}

Field standardize_las(const Field& field, int kernel_cells) {
  const GridSpec& g = field.grid;
  if (kernel_cells < 1 || kernel_cells % 2 == 0) {
    throw Error(ErrorCode::invalid_argument,
                "LAS kernel must be a positive odd number of cells, got " + std::to_string(kernel_cells));
  }
  if (kernel_cells > std::min(g.n_lat, g.n_lon)) {
    throw Error(ErrorCode::invalid_argument, "LAS kernel larger than the grid");
  }
  return local_standardize(field, kernel_cells, std::vector<int>(g.n_lat, kernel_cells));
}

LalasKernel lalas_kernel(const GridSpec& grid, double base_kernel_km) {
  if (!(base_kernel_km > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "LALAS base kernel must be positive");
  }
  LalasKernel k;
  const double cell_km = kKmPerDegree * grid.res_deg;
  k.lat_width_exact = base_kernel_km / cell_km;
  k.lat_width = nearest_odd(k.lat_width_exact);
  const int max_lon = largest_odd_at_most(grid.n_lon);
  for (double lat : grid.lat_centers) {
    const double exact = base_kernel_km / (cell_km * std::cos(lat * std::numbers::pi / 180.0));
    k.lon_widths_exact.push_back(exact);
    k.lon_widths.push_back(std::clamp(nearest_odd(exact), 1, std::max(max_lon, 1)));
  }
  return k;
}

Field standardize_lalas(const Field& field, double base_kernel_km) {
  const LalasKernel k = lalas_kernel(field.grid, base_kernel_km);
  return local_standardize(field, k.lat_width, k.lon_widths);
}

Field Normalization::apply(const Field& field, std::string_view var) const {
  switch (mode) {
    case Mode::none:
      return field;
    case Mode::global: {
      const auto it = stats.find(var);
      if (it == stats.end()) {
        throw Error(ErrorCode::invalid_argument, "no normalization statistics for '" + std::string(var) + "'");
      }
      return standardize_global(field, it->second);
    }
    case Mode::las:
      return standardize_las(field, las_kernel);
    case Mode::lalas:
      return standardize_lalas(field, lalas_base_km);
  }
  return field;
}

Normalization::Mode parse_normalization_mode(std::string_view name) {
  if (name == "none") return Normalization::Mode::none;
  if (name == "global") return Normalization::Mode::global;
  if (name == "las") return Normalization::Mode::las;
  if (name == "lalas") return Normalization::Mode::lalas;
  throw Error(ErrorCode::invalid_argument, "unknown normalization '" + std::string(name) + "'");
}

std::string_view to_string(Normalization::Mode mode) {
  switch (mode) {
    case Normalization::Mode::none: return "none";
    case Normalization::Mode::global: return "global";
    case Normalization::Mode::las: return "las";
    case Normalization::Mode::lalas: return "lalas";
  }
  return "none";
}

json stats_to_json(const std::vector<VarStats>& stats) {
  json vars = json::object();
  for (const auto& s : stats) {
    vars[s.var] = {{"mean", s.mean},
                   {"std", s.std},
                   {"count", s.count},
                   {"range", {format_timestamp(s.range.start), format_timestamp(s.range.end)}}};
  }
  return json{{"variables", vars}};
}

std::vector<VarStats> stats_from_json(const json& j) {
  std::vector<VarStats> out;
  try {
    for (const auto& [name, v] : j.at("variables").items()) {
      VarStats s;
      s.var = name;
      s.mean = v.at("mean").get<double>();
      s.std = v.at("std").get<double>();
      s.count = v.value("count", std::uint64_t{0});
      if (v.contains("range")) {
        s.range = {parse_timestamp(v.at("range").at(0).get<std::string>()),
                   parse_timestamp(v.at("range").at(1).get<std::string>())};
      }
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, std::string("statistics sidecar: ") + e.what());
  }
  return out;
}

void write_stats_sidecar(const std::filesystem::path& prefix, const std::vector<VarStats>& stats) {
  std::ofstream out(stats_path(prefix), std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + stats_path(prefix).string());
  out << stats_to_json(stats).dump(2) << "\n";
}

std::vector<VarStats> read_stats_sidecar(const std::filesystem::path& prefix) {
  std::ifstream in(stats_path(prefix));
  if (!in) throw Error(ErrorCode::io, "cannot open " + stats_path(prefix).string());
  try {
    return stats_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::format, std::string("statistics sidecar: ") + e.what());
  }
}

}  // namespace rainstore
