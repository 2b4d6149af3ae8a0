#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rainstore/grid.hpp"
#include "rainstore/store.hpp"
#include "rainstore/time.hpp"

namespace rainstore {

// Standard deviations below this are treated as a constant variable and
// replaced by 1.
inline constexpr double kStdFloor = 1e-8;
// Mean Earth radius 6371 km times pi/180.
inline constexpr double kKmPerDegree = 111.195;

struct VarStats {
  std::string var;
  double mean = 0.0;
  double std = 1.0;  // population std, floored
  TimeRange range{};
  std::uint64_t count = 0;
};

// Mean and population std over all non-NaN cells of the frames in range
// (static variables: their single frame). Compensated two-pass summation.
VarStats global_stats(const Datastore& store, std::string_view var, const TimeRange& range);

// Same statistics over the non-NaN cells of one field.
VarStats field_stats(const Field& field, std::string_view var);

Field standardize_global(const Field& field, const VarStats& stats);
Field destandardize_global(const Field& field, const VarStats& stats);

// Local area-wise standardization over an odd kernel x kernel neighborhood.
// Longitude wraps; the window is clipped at the northern/southern grid edge.
Field standardize_las(const Field& field, int kernel_cells);

struct LalasKernel {
  double lat_width_exact = 0.0;
  int lat_width = 1;
  std::vector<double> lon_widths_exact;  // per row, before rounding
  std::vector<int> lon_widths;           // per row, odd, within [1, n_lon]
};

// Kernel whose physical extent stays close to base_kernel_km at every latitude.
LalasKernel lalas_kernel(const GridSpec& grid, double base_kernel_km);
Field standardize_lalas(const Field& field, double base_kernel_km);

// Active normalization applied to sample input channels.
struct Normalization {
  enum class Mode { none, global, las, lalas };
  Mode mode = Mode::none;
  std::map<std::string, VarStats, std::less<>> stats;  // for Mode::global
  int las_kernel = 3;
  double lalas_base_km = 1000.0;

  Field apply(const Field& field, std::string_view var) const;
};

Normalization::Mode parse_normalization_mode(std::string_view name);
std::string_view to_string(Normalization::Mode mode);

nlohmann::json stats_to_json(const std::vector<VarStats>& stats);
std::vector<VarStats> stats_from_json(const nlohmann::json& j);
void write_stats_sidecar(const std::filesystem::path& prefix, const std::vector<VarStats>& stats);
std::vector<VarStats> read_stats_sidecar(const std::filesystem::path& prefix);

}  // namespace rainstore
