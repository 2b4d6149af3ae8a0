#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rainstore {

// Latitude/longitude grid described by its cell centers. Latitude index 0 is
// the northernmost row; longitudes increase eastward from the first center.
struct GridSpec {
  int n_lat = 0;
  int n_lon = 0;
  double res_deg = 0.0;
  std::vector<double> lat_centers;
  std::vector<double> lon_centers;

  std::size_t cells() const { return static_cast<std::size_t>(n_lat) * n_lon; }
  std::size_t index(int lat, int lon) const {
    return static_cast<std::size_t>(lat) * n_lon + lon;
  }

  // True for a regular global grid as produced by make_grid.
  bool is_regular_global() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// Regular global grid; centers sit half a cell away from the poles and the
// prime meridian. Throws when res_deg does not divide 180 or 360.
GridSpec make_grid(double res_deg);

// Grid with explicit centers (regional or irregular test grids). Latitudes must
// be strictly decreasing and longitudes strictly increasing.
GridSpec grid_from_centers(std::vector<double> lat_centers, std::vector<double> lon_centers);

// Gridded variable; missing cells are quiet NaN.
struct Field {
  GridSpec grid;
  std::vector<double> values;
  std::string units;

  Field() = default;
  Field(GridSpec g, std::vector<double> v, std::string u = {});
  Field(GridSpec g, double fill, std::string u = {});

  double at(int lat, int lon) const { return values[grid.index(lat, lon)]; }
  double& at(int lat, int lon) { return values[grid.index(lat, lon)]; }
};

// cos(lat) normalized so the weights average to one over rows.
std::vector<double> latitude_weights(std::span<const double> lat_centers);
std::vector<double> latitude_weights(const GridSpec& grid);

// Bilinear interpolation at destination cell centers. Longitude wraps at 360;
// latitudes outside the outermost source centers clamp to the nearest row.
// A NaN in any source cell with non-zero weight yields NaN.
Field regrid_bilinear(const Field& field, const GridSpec& dst);

// Max over aligned factor x factor blocks, ignoring NaN unless the whole block
// is NaN.
Field downscale_maxpool(const Field& field, int factor);

}  // namespace rainstore
