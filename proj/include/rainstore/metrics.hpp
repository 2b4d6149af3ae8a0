#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "rainstore/grid.hpp"
#include "rainstore/sampler.hpp"

namespace rainstore {

// Mean over forecast times of the per-time latitude-weighted RMSE.
// Inputs must be NaN-free; mask beforehand.
double lw_rmse(std::span<const Field> preds, std::span<const Field> targets, const GridSpec& grid);

// Single forecast time on flat row-major arrays.
double lw_rmse_frame(std::span<const double> pred, std::span<const double> target, const GridSpec& grid);

struct ClassRmseReport {
  std::array<std::optional<double>, kNumClasses> per_class{};  // nullopt: class absent
  std::array<std::uint64_t, kNumClasses> counts{};
  double mean = 0.0;   // RMSE over all pixels
  double macro = 0.0;  // mean of present per-class RMSEs
  std::uint64_t total = 0;
};

// Unweighted RMSE per precipitation class, where membership is decided by the
// target value.
ClassRmseReport class_rmse(std::span<const double> preds, std::span<const double> targets,
                           const ClassBinning& binning = {});

nlohmann::json to_json(const ClassRmseReport& report);
// Columns L, M, H, V, Mean, Macro.
std::string format_table(const ClassRmseReport& report, const std::string& row_label = "");

}  // namespace rainstore
