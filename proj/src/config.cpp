#include "rainstore/config.hpp"

#include <fstream>
#include <set>

#include "rainstore/error.hpp"

namespace rainstore {

using nlohmann::json;

namespace {

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

TimeRange range_from_json(const json& j, const std::string& where) {
  check_keys(j, {"start", "end"}, where);
  if (!j.contains("start") || !j.contains("end") || !j.at("start").is_string() || !j.at("end").is_string()) {
    throw Error(ErrorCode::format, where + ": needs string 'start' and 'end'");
  }
  const TimeRange r = parse_time_range(j.at("start").get<std::string>(), j.at("end").get<std::string>());
  if (r.empty()) throw Error(ErrorCode::invalid_argument, where + ": end precedes start");
  return r;
}

json range_to_json(const TimeRange& r) {
  return {{"start", format_timestamp(r.start)}, {"end", format_timestamp(r.end)}};
}

}  // namespace

TaskConfig task_config_from_json(const json& j) {
  check_keys(j, {"sample", "partition", "normalization", "climatology_range"}, "config");
  TaskConfig c;
  if (j.contains("sample")) {
    const json& s = j.at("sample");
    const std::string w = "config.sample";
    check_keys(s, {"input_vars", "static_vars", "history_h", "step_h", "lead_interval_h", "max_lead_h", "target_var"},
               w);
    read_opt(s, "input_vars", c.sample.input_vars, w);
    read_opt(s, "static_vars", c.sample.static_vars, w);
    read_opt(s, "history_h", c.sample.history_h, w);
    read_opt(s, "step_h", c.sample.step_h, w);
    read_opt(s, "lead_interval_h", c.sample.lead_interval_h, w);
    read_opt(s, "max_lead_h", c.sample.max_lead_h, w);
    read_opt(s, "target_var", c.sample.target_var, w);
  }
  c.sample.validate();
  if (j.contains("partition")) {
    const json& p = j.at("partition");
    const std::string w = "config.partition";
    check_keys(p, {"train", "val", "test", "t0_stride_h"}, w);
    if (p.contains("train")) c.partition.train = range_from_json(p.at("train"), w + ".train");
    if (p.contains("val")) c.partition.val = range_from_json(p.at("val"), w + ".val");
    if (p.contains("test")) c.partition.test = range_from_json(p.at("test"), w + ".test");
    read_opt(p, "t0_stride_h", c.partition.t0_stride_h, w);
    if (c.partition.t0_stride_h < 1) throw Error(ErrorCode::invalid_argument, w + ": t0_stride_h must be >= 1");
  }
  if (j.contains("normalization")) {
    const json& n = j.at("normalization");
    const std::string w = "config.normalization";
    check_keys(n, {"mode", "las_kernel", "lalas_base_km", "stats_range"}, w);
    std::string mode = "none";
    read_opt(n, "mode", mode, w);
    c.norm_mode = parse_normalization_mode(mode);
    read_opt(n, "las_kernel", c.las_kernel, w);
    read_opt(n, "lalas_base_km", c.lalas_base_km, w);
    if (c.las_kernel < 1 || c.las_kernel % 2 == 0) {
      throw Error(ErrorCode::invalid_argument, w + ": las_kernel must be a positive odd number");
    }
    if (!(c.lalas_base_km > 0.0)) throw Error(ErrorCode::invalid_argument, w + ": lalas_base_km must be > 0");
    if (n.contains("stats_range")) c.stats_range = range_from_json(n.at("stats_range"), w + ".stats_range");
  }
  if (j.contains("climatology_range")) {
    c.climatology_range = range_from_json(j.at("climatology_range"), "config.climatology_range");
  }
  return c;
}

TaskConfig load_task_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, path.string() + ": " + e.what());
  }
  return task_config_from_json(j);
}

json to_json(const TaskConfig& c) {
  json j{{"sample",
          {{"input_vars", c.sample.input_vars},
           {"static_vars", c.sample.static_vars},
           {"history_h", c.sample.history_h},
           {"step_h", c.sample.step_h},
           {"lead_interval_h", c.sample.lead_interval_h},
           {"max_lead_h", c.sample.max_lead_h},
           {"target_var", c.sample.target_var}}},
         {"partition",
          {{"train", range_to_json(c.partition.train)},
           {"val", range_to_json(c.partition.val)},
           {"test", range_to_json(c.partition.test)},
           {"t0_stride_h", c.partition.t0_stride_h}}},
         {"normalization",
          {{"mode", to_string(c.norm_mode)}, {"las_kernel", c.las_kernel}, {"lalas_base_km", c.lalas_base_km}}}};
  if (c.stats_range) j["normalization"]["stats_range"] = range_to_json(*c.stats_range);
  if (c.climatology_range) j["climatology_range"] = range_to_json(*c.climatology_range);
  return j;
}

Normalization resolve_normalization(const TaskConfig& config, std::span<const Datastore> stores) {
  Normalization norm;
  norm.mode = config.norm_mode;
  norm.las_kernel = config.las_kernel;
  norm.lalas_base_km = config.lalas_base_km;
  if (norm.mode != Normalization::Mode::global) return norm;
  if (stores.empty()) throw Error(ErrorCode::invalid_argument, "no stores given");

  const TimeRange range = config.stats_range.value_or(config.partition.train);
  std::vector<std::string> names = config.sample.input_vars;
  names.insert(names.end(), config.sample.static_vars.begin(), config.sample.static_vars.end());
  for (const auto& name : names) {
    const Datastore* owner = nullptr;
    for (const auto& s : stores) {
      if (s.has(name)) {
        owner = &s;
        break;
      }
    }
    if (owner == nullptr) {
      norm.stats[name] = field_stats(coordinate_field(stores.front().grid(), name), name);
      continue;
    }
    std::optional<VarStats> found;
    if (std::filesystem::exists(stats_path(owner->prefix()))) {
      for (auto& s : read_stats_sidecar(owner->prefix())) {
        if (s.var == name) found = s;
      }
    }
    norm.stats[name] = found ? *found : global_stats(*owner, name, range);
  }
  return norm;
}

}  // namespace rainstore
