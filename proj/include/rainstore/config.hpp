#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rainstore/normalize.hpp"
#include "rainstore/sampler.hpp"
#include "rainstore/store.hpp"

namespace rainstore {

// Task configuration shared by the CLI and bindings. Every field is optional
// in JSON; omitted fields keep the benchmark defaults.
//
// {
//   "sample":        {"input_vars": [...], "static_vars": [...], "history_h": 12, "step_h": 3,
//                     "lead_interval_h": 24, "max_lead_h": 120, "target_var": "tp"},
//   "partition":     {"train": {"start": "...", "end": "..."}, "val": {...}, "test": {...},
//                     "t0_stride_h": 1},
//   "normalization": {"mode": "none|global|las|lalas", "las_kernel": 3, "lalas_base_km": 1000,
//                     "stats_range": {"start": "...", "end": "..."}},
//   "climatology_range": {"start": "...", "end": "..."}
// }
struct TaskConfig {
  SampleSpec sample;
  PartitionSpec partition = PartitionSpec::benchmark_default();
  Normalization::Mode norm_mode = Normalization::Mode::none;
  int las_kernel = 3;
  double lalas_base_km = 1000.0;
  std::optional<TimeRange> stats_range;        // defaults to the train range
  std::optional<TimeRange> climatology_range;  // defaults to the train range
};

// Rejects unknown keys and wrongly typed values with ErrorCode::format.
TaskConfig task_config_from_json(const nlohmann::json& j);
TaskConfig load_task_config(const std::filesystem::path& path);
nlohmann::json to_json(const TaskConfig& config);

// Normalization for the sample channels. Global statistics come from each
// store's stats sidecar when present there, otherwise they are computed over
// the stats range; synthesized lat/lon use the statistics of the grid itself.
Normalization resolve_normalization(const TaskConfig& config, std::span<const Datastore> stores);

}  // namespace rainstore
