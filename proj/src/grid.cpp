#include "rainstore/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rainstore/error.hpp"

namespace rainstore {

namespace {

constexpr double kDivisibilityTol = 1e-9;

int cells_along(double extent, double res_deg, const char* dimension) {
  const double ratio = extent / res_deg;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(rounded * res_deg - extent) > kDivisibilityTol) {
    throw Error(ErrorCode::invalid_argument,
                std::string("resolution ") + std::to_string(res_deg) + " does not divide the " +
                    dimension + " extent " + std::to_string(extent));
  }
  return static_cast<int>(rounded);
}

bool strictly_decreasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::less_equal<>{}) == v.end();
}

bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>{}) == v.end();
}

// Bracketing source indices and the weight of the second one.
struct Bracket {
  int first;
  int second;
  double weight;
};

std::vector<Bracket> latitude_brackets(const std::vector<double>& src,
                                       const std::vector<double>& dst) {
  std::vector<Bracket> out;
  out.reserve(dst.size());
  const int n = static_cast<int>(src.size());
  for (double lat : dst) {
    if (lat >= src.front()) {
      out.push_back({0, 0, 0.0});
    } else if (lat <= src.back()) {
      out.push_back({n - 1, n - 1, 0.0});
    } else {
      // first row whose center lies south of lat
      const auto it = std::upper_bound(src.begin(), src.end(), lat, std::greater<>{});
      const int i1 = static_cast<int>(it - src.begin());
      const int i0 = i1 - 1;
      const double w = (src[i0] - lat) / (src[i0] - src[i1]);
      out.push_back({i0, i1, w});
    }
  }
  return out;
}

double wrap360(double x) {
  double r = std::fmod(x, 360.0);
  if (r < 0.0) r += 360.0;
  return r;
}

std::vector<Bracket> longitude_brackets(const std::vector<double>& src,
                                        const std::vector<double>& dst) {
  const int n = static_cast<int>(src.size());
  std::vector<double> rel(src.size());
  for (int j = 0; j < n; ++j) rel[j] = src[j] - src[0];

  std::vector<Bracket> out;
  out.reserve(dst.size());
  for (double lon : dst) {
    const double d = wrap360(lon - src[0]);
    const auto it = std::upper_bound(rel.begin(), rel.end(), d);
    const int j0 = static_cast<int>(it - rel.begin()) - 1;
    const int j1 = (j0 + 1) % n;
    const double lo = rel[j0];
    const double hi = (j0 + 1 < n) ? rel[j0 + 1] : 360.0;
    const double w = (hi > lo) ? (d - lo) / (hi - lo) : 0.0;
    out.push_back({j0, j1, w});
  }
  return out;
}

}  // namespace

bool GridSpec::is_regular_global() const {
  if (n_lat <= 0 || n_lon <= 0 || res_deg <= 0.0) return false;
  if (std::abs(n_lat * res_deg - 180.0) > kDivisibilityTol ||
      std::abs(n_lon * res_deg - 360.0) > kDivisibilityTol) {
    return false;
  }
  return *this == make_grid(res_deg);
}

GridSpec make_grid(double res_deg) {
  if (!(res_deg > 0.0) || !std::isfinite(res_deg)) {
    throw Error(ErrorCode::invalid_argument, "resolution must be positive");
  }
  GridSpec grid;
  grid.res_deg = res_deg;
  grid.n_lat = cells_along(180.0, res_deg, "latitude");
  grid.n_lon = cells_along(360.0, res_deg, "longitude");
  grid.lat_centers.resize(grid.n_lat);
  grid.lon_centers.resize(grid.n_lon);
  for (int i = 0; i < grid.n_lat; ++i) {
    grid.lat_centers[i] = 90.0 - res_deg * (i + 0.5);
  }
  for (int j = 0; j < grid.n_lon; ++j) {
    grid.lon_centers[j] = res_deg * (j + 0.5);
  }
  return grid;
}

GridSpec grid_from_centers(std::vector<double> lat_centers, std::vector<double> lon_centers) {
  if (lat_centers.empty() || lon_centers.empty()) {
    throw Error(ErrorCode::invalid_argument, "grid needs at least one row and one column");
  }
  if (!strictly_decreasing(lat_centers)) {
    throw Error(ErrorCode::invalid_argument, "latitude centers must be strictly decreasing");
  }
  if (!strictly_increasing(lon_centers) || lon_centers.back() - lon_centers.front() >= 360.0) {
    throw Error(ErrorCode::invalid_argument,
                "longitude centers must be strictly increasing within one turn");
  }
  for (double lat : lat_centers) {
    if (!(std::abs(lat) < 90.0)) {
      throw Error(ErrorCode::invalid_argument, "latitude centers must lie strictly inside (-90, 90)");
    }
  }
  GridSpec grid;
  grid.n_lat = static_cast<int>(lat_centers.size());
  grid.n_lon = static_cast<int>(lon_centers.size());
  grid.res_deg = grid.n_lat > 1 ? lat_centers[0] - lat_centers[1]
                 : grid.n_lon > 1 ? lon_centers[1] - lon_centers[0]
                                  : 0.0;
  grid.lat_centers = std::move(lat_centers);
  grid.lon_centers = std::move(lon_centers);
  return grid;
}

Field::Field(GridSpec g, std::vector<double> v, std::string u)
    : grid(std::move(g)), values(std::move(v)), units(std::move(u)) {
  if (values.size() != grid.cells()) {
    throw Error(ErrorCode::invalid_argument,
                "field has " + std::to_string(values.size()) + " values for a grid of " +
                    std::to_string(grid.cells()) + " cells");
  }
}

Field::Field(GridSpec g, double fill, std::string u)
    : grid(std::move(g)), units(std::move(u)) {
  values.assign(grid.cells(), fill);
}

std::vector<double> latitude_weights(std::span<const double> lat_centers) {
  std::vector<double> weights(lat_centers.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lat_centers.size(); ++i) {
    weights[i] = std::cos(lat_centers[i] * std::numbers::pi / 180.0);
    total += weights[i];
  }
  const double mean = total / static_cast<double>(lat_centers.size());
  for (double& w : weights) w /= mean;
  return weights;
}

std::vector<double> latitude_weights(const GridSpec& grid) {
  return latitude_weights(std::span<const double>(grid.lat_centers));
}

Field regrid_bilinear(const Field& field, const GridSpec& dst) {
  const GridSpec& src = field.grid;
  if (field.values.size() != src.cells()) {
    throw Error(ErrorCode::invalid_argument, "field length does not match its grid");
  }
  const auto rows = latitude_brackets(src.lat_centers, dst.lat_centers);
  const auto cols = longitude_brackets(src.lon_centers, dst.lon_centers);

  Field out(dst, 0.0, field.units);
  for (int i = 0; i < dst.n_lat; ++i) {
    const Bracket& r = rows[i];
    for (int j = 0; j < dst.n_lon; ++j) {
      const Bracket& c = cols[j];
      const double weights[4] = {(1.0 - r.weight) * (1.0 - c.weight), (1.0 - r.weight) * c.weight,
                                 r.weight * (1.0 - c.weight), r.weight * c.weight};
      const double corners[4] = {field.at(r.first, c.first), field.at(r.first, c.second),
                                 field.at(r.second, c.first), field.at(r.second, c.second)};
      double value = 0.0;
      for (int k = 0; k < 4; ++k) {
        if (weights[k] == 0.0) continue;
        value += weights[k] * corners[k];
      }
      out.at(i, j) = value;
    }
  }
  return out;
}

Field downscale_maxpool(const Field& field, int factor) {
  const GridSpec& src = field.grid;
  if (factor < 1) {
    throw Error(ErrorCode::invalid_argument, "pooling factor must be positive");
  }
  if (src.n_lat % factor != 0 || src.n_lon % factor != 0) {
    throw Error(ErrorCode::invalid_argument,
                "grid " + std::to_string(src.n_lat) + "x" + std::to_string(src.n_lon) +
                    " is not divisible by pooling factor " + std::to_string(factor));
  }
  if (factor == 1) return field;

  GridSpec dst;
  if (src.is_regular_global()) {
    dst = make_grid(src.res_deg * factor);
  } else {
    std::vector<double> lat(src.n_lat / factor, 0.0), lon(src.n_lon / factor, 0.0);
    for (int i = 0; i < src.n_lat; ++i) lat[i / factor] += src.lat_centers[i] / factor;
    for (int j = 0; j < src.n_lon; ++j) lon[j / factor] += src.lon_centers[j] / factor;
    dst = grid_from_centers(std::move(lat), std::move(lon));
    dst.res_deg = src.res_deg * factor;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  Field out(dst, nan, field.units);
  for (int i = 0; i < src.n_lat; ++i) {
    for (int j = 0; j < src.n_lon; ++j) {
      const double v = field.at(i, j);
      if (std::isnan(v)) continue;
      double& slot = out.at(i / factor, j / factor);
      if (std::isnan(slot) || v > slot) slot = v;
    }
  }
  return out;
}

}  // namespace rainstore
