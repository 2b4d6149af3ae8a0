#include "rainstore/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "rainstore/error.hpp"

namespace rainstore {

double lw_rmse_frame(std::span<const double> pred, std::span<const double> target, const GridSpec& grid) {
  if (pred.size() != grid.cells() || target.size() != grid.cells()) {
    throw Error(ErrorCode::invalid_argument, "prediction/target shape does not match grid");
  }
  const std::vector<double> weights = latitude_weights(grid);
  double total = 0.0;
  for (int i = 0; i < grid.n_lat; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_lon; ++j) {
      const std::size_t k = grid.index(i, j);
      const double d = pred[k] - target[k];
      if (std::isnan(d)) throw Error(ErrorCode::invalid_argument, "NaN in lw_rmse input; mask first");
      row += d * d;
    }
    total += weights[i] * row;
  }
  return std::sqrt(total / static_cast<double>(grid.cells()));
}

double lw_rmse(std::span<const Field> preds, std::span<const Field> targets, const GridSpec& grid) {
  if (preds.empty()) throw Error(ErrorCode::invalid_argument, "lw_rmse over an empty set of times");
  if (preds.size() != targets.size()) {
    throw Error(ErrorCode::invalid_argument, "prediction and target time counts differ");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    sum += lw_rmse_frame(preds[t].values, targets[t].values, grid);
  }
  return sum / static_cast<double>(preds.size());
}

ClassRmseReport class_rmse(std::span<const double> preds, std::span<const double> targets,
                           const ClassBinning& binning) {
  if (preds.size() != targets.size()) {
    throw Error(ErrorCode::invalid_argument, "prediction and target lengths differ");
  }
  if (preds.empty()) throw Error(ErrorCode::invalid_argument, "class_rmse over no pixels");
  std::array<double, kNumClasses> sq{};
  double all = 0.0;
  ClassRmseReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int c = static_cast<int>(binning.classify(targets[i]));
    const double d = preds[i] - targets[i];
    sq[c] += d * d;
    all += d * d;
    ++r.counts[c];
  }
  r.total = preds.size();
  r.mean = std::sqrt(all / static_cast<double>(r.total));
  double macro = 0.0;
  int present = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    if (r.counts[c] == 0) continue;
    r.per_class[c] = std::sqrt(sq[c] / static_cast<double>(r.counts[c]));
    macro += *r.per_class[c];
    ++present;
  }
  r.macro = macro / present;
  return r;
}

nlohmann::json to_json(const ClassRmseReport& report) {
  static const char* keys[kNumClasses] = {"L", "M", "H", "V"};
  nlohmann::json per = nlohmann::json::object();
  nlohmann::json counts = nlohmann::json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    per[keys[c]] = report.per_class[c] ? nlohmann::json(*report.per_class[c]) : nlohmann::json(nullptr);
    counts[keys[c]] = report.counts[c];
  }
  return {{"per_class", per}, {"counts", counts}, {"mean", report.mean}, {"macro", report.macro},
          {"total", report.total}};
}

std::string format_table(const ClassRmseReport& report, const std::string& row_label) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-16s %8s %8s %8s %8s %8s %8s\n", "", "L", "M", "H", "V", "Mean", "Macro");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s", row_label.c_str());
  out += buf;
  for (const auto& v : report.per_class) {
    if (v) {
      std::snprintf(buf, sizeof buf, " %8.4f", *v);
    } else {
      std::snprintf(buf, sizeof buf, " %8s", "-");
    }
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " %8.4f %8.4f\n", report.mean, report.macro);
  out += buf;
  return out;
}

}  // namespace rainstore
