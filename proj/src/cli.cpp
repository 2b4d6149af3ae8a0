#include "rainstore/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rainstore/analysis.hpp"
#include "rainstore/baselines.hpp"
#include "rainstore/bench.hpp"
#include "rainstore/config.hpp"
#include "rainstore/error.hpp"
#include "rainstore/metrics.hpp"
#include "rainstore/normalize.hpp"
#include "rainstore/sampler.hpp"
#include "rainstore/store.hpp"
#include "rainstore/synth.hpp"

namespace rainstore {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Output {
  std::ostream& out;
  std::ostream& err;
  bool as_json = false;

  // Human-readable text goes to stdout, or to stderr when stdout carries JSON.
  std::ostream& human() { return as_json ? err : out; }
  void emit(const json& j) {
    if (as_json) out << j.dump(2) << '\n';
  }
};

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

std::vector<Datastore> open_stores(const std::vector<std::string>& prefixes) {
  if (prefixes.empty()) throw Error(ErrorCode::invalid_argument, "at least one --store is required");
  std::vector<Datastore> stores;
  for (const auto& p : prefixes) stores.push_back(Datastore::open(p));
  return stores;
}

TimeRange store_extent(const Datastore& store) {
  const StoreHeader& h = store.header();
  return {h.time_start, h.timestamp(h.n_steps - 1)};
}

TimeRange range_or(const std::string& start, const std::string& end, const TimeRange& fallback) {
  if (start.empty() && end.empty()) return fallback;
  const TimeRange given = parse_time_range(start.empty() ? format_timestamp(fallback.start) : start,
                                           end.empty() ? format_timestamp(fallback.end) : end);
  if (given.empty()) throw Error(ErrorCode::invalid_argument, "--end precedes --start");
  return given;
}

TaskConfig config_or_default(const std::string& path) {
  return path.empty() ? TaskConfig{} : load_task_config(path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
  if (!f) throw Error(ErrorCode::io, "cannot write " + path.string());
}

json grid_summary(const GridSpec& g) {
  return {{"n_lat", g.n_lat}, {"n_lon", g.n_lon}, {"res_deg", g.res_deg}};
}

json sample_index_json(const SampleIndex& s) {
  return {{"t0", format_timestamp(s.t0)}, {"tau_h", s.tau_h}};
}

int default_workers() {
  if (const char* env = std::getenv("RAINSTORE_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument, "RAINSTORE_WORKERS must be a positive integer");
  }
  return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gridded climate datastore and precipitation forecast evaluation", "rainstore"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 0;
  bool as_json = false;
  std::function<void(Output&)> action;

  auto add_common = [&](CLI::App* sub) {
    CLI::Option* s = sub->add_option("--seed", seed, "Random seed (default 0)");
    sub->add_flag("--json", as_json, "Machine-readable JSON on stdout; tables go to stderr");
    return s;
  };

  // shared option storage
  std::vector<std::string> stores;
  std::string config_path, start, end, var, out_path, in_path, csv_path, split_name;
  std::vector<std::string> vars;

  // generate
  {
    auto* sub = app.add_subcommand("generate", "Write a synthetic ingest directory from a generator config");
    CLI::Option* seed_opt = add_common(sub);
    sub->add_option("--config", config_path, "Generator config (JSON)")->required();
    sub->add_option("--out", out_path, "Output ingest directory")->required();
    sub->callback([&, seed_opt] {
      action = [&, seed_opt](Output& o) {
        const json j = read_json(config_path);
        const SynthConfig cfg = synth_config_from_json(j);
        std::uint64_t s = seed;
        if (seed_opt->count() == 0 && j.contains("seed")) s = j.at("seed").get<std::uint64_t>();
        generate(cfg, s, out_path);
        json names = json::array();
        for (const auto& v : cfg.variables) names.push_back(v.name);
        o.emit({{"out", out_path}, {"seed", s}, {"n_steps", cfg.n_steps}, {"grid", grid_summary(cfg.grid)},
                {"variables", names}});
        o.human() << "generated " << cfg.variables.size() << " variable(s) x " << cfg.n_steps << " steps on "
                  << cfg.grid.n_lat << "x" << cfg.grid.n_lon << " into " << out_path << '\n';
      };
    });
  }

  // convert
  double res = 0.0;
  {
    auto* sub = app.add_subcommand("convert", "Convert an ingest directory into a store");
    add_common(sub);
    sub->add_option("--in", in_path, "Ingest directory")->required();
    sub->add_option("--out", out_path, "Output store prefix")->required();
    sub->add_option("--res", res, "Target grid resolution in degrees (default: native grid)");
    sub->callback([&] {
      action = [&](Output& o) {
        GridSpec grid;
        if (res > 0.0) {
          grid = make_grid(res);
        } else {
          grid = read_ingest_descriptors(in_path).front().grid;
        }
        const Datastore store = convert(in_path, out_path, grid);
        const StoreHeader& h = store.header();
        json names = json::array();
        for (const auto& v : h.variables) names.push_back(v.name);
        o.emit({{"prefix", out_path}, {"grid", grid_summary(h.grid)}, {"n_steps", h.n_steps},
                {"variables", names}, {"data_bytes", h.data_bytes()}});
        o.human() << "wrote " << out_path << ": " << h.variables.size() << " variable(s), " << h.n_steps
                  << " steps, " << h.grid.n_lat << "x" << h.grid.n_lon << ", " << h.data_bytes() << " bytes\n";
      };
    });
  }

  // info
  {
    auto* sub = app.add_subcommand("info", "Describe a store");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix")->required();
    sub->callback([&] {
      action = [&](Output& o) {
        json all = json::array();
        for (const Datastore& s : open_stores(stores)) {
          const StoreHeader& h = s.header();
          json j = header_to_json(h);
          j["prefix"] = s.prefix().string();
          j["has_stats"] = fs::exists(stats_path(s.prefix()));
          all.push_back(j);
          std::ostream& t = o.human();
          t << s.prefix().string() << ": grid " << h.grid.n_lat << "x" << h.grid.n_lon << " (" << h.grid.res_deg
            << " deg), " << h.n_steps << " steps of " << h.time_step_s << " s from "
            << format_timestamp(h.time_start) << '\n';
          for (const auto& v : h.variables) {
            t << "  " << std::left << std::setw(12) << v.name << std::setw(10)
              << (v.is_static() ? "static" : "temporal") << std::setw(10) << v.units << "offset " << v.offset_bytes
              << '\n';
          }
        }
        o.emit(all.size() == 1 ? all.front() : all);
      };
    });
  }

  // validate-partition
  {
    auto* sub = app.add_subcommand("validate-partition", "Check that splits share no frames");
    add_common(sub);
    sub->add_option("--config", config_path, "Task config (JSON); defaults apply when omitted");
    sub->callback([&] {
      action = [&](Output& o) {
        const TaskConfig cfg = config_or_default(config_path);
        const auto violation = validate_partition(cfg.partition, cfg.sample);
        json j{{"ok", !violation.has_value()},
               {"margin_h", PartitionSpec::margin_h(cfg.sample)},
               {"partition", to_json(cfg).at("partition")}};
        if (violation) {
          j["violation"] = {{"split", to_string(violation->split)},
                            {"sample", sample_index_json(violation->sample)},
                            {"frame", format_timestamp(violation->frame)},
                            {"other_split", to_string(violation->other_split)},
                            {"other_sample", sample_index_json(violation->other_sample)}};
          o.emit(j);
          throw Error(ErrorCode::partition_violation, violation->describe());
        }
        json counts = json::object();
        for (Split s : {Split::train, Split::val, Split::test}) {
          counts[std::string(to_string(s))] = iter_indices(cfg.partition, cfg.sample, s, seed).size();
        }
        j["samples"] = counts;
        o.emit(j);
        o.human() << "partition ok: train " << counts["train"] << ", val " << counts["val"] << ", test "
                  << counts["test"] << " samples\n";
      };
    });
  }

  // dump-sample
  std::uint64_t index = 0, count = 1;
  bool list_only = false;
  std::string t0_text;
  int tau = -1;
  {
    auto* sub = app.add_subcommand("dump-sample", "Write composed samples (header line + float32 payload)");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix (repeatable)")->required();
    sub->add_option("--config", config_path, "Task config (JSON)");
    sub->add_option("--split", split_name, "train|val|test (default train)");
    sub->add_option("--index", index, "Position in the shuffled split sequence");
    sub->add_option("--count", count, "Number of consecutive samples");
    sub->add_option("--t0", t0_text, "Explicit issue time instead of --index");
    sub->add_option("--tau", tau, "Lead time in hours with --t0");
    sub->add_option("--out", out_path, "Output file (default stdout)");
    sub->add_flag("--list", list_only, "Print the split's (t0, tau) sequence instead of payloads");
    sub->callback([&] {
      action = [&](Output& o) {
        const TaskConfig cfg = config_or_default(config_path);
        std::vector<Datastore> opened = open_stores(stores);
        const Normalization norm = resolve_normalization(cfg, opened);
        const SampleBuilder builder(opened, cfg.sample, norm);
        const Split split = parse_split(split_name.empty() ? "train" : split_name);

        std::vector<SampleIndex> picks;
        if (!t0_text.empty()) {
          if (tau < 0) throw Error(ErrorCode::invalid_argument, "--t0 needs --tau");
          picks.push_back({parse_timestamp(t0_text), tau});
        } else {
          const auto seq = iter_indices(cfg.partition, cfg.sample, split, seed, builder.extent());
          if (list_only) {
            json items = json::array();
            for (const auto& s : seq) items.push_back(sample_index_json(s));
            o.out << json{{"split", to_string(split)}, {"seed", seed}, {"count", seq.size()}, {"indices", items}}
                         .dump(o.as_json ? 2 : -1)
                  << '\n';
            return;
          }
          if (count == 0 || index + count > seq.size()) {
            throw Error(ErrorCode::out_of_range, "requested samples [" + std::to_string(index) + ", " +
                                                     std::to_string(index + count) + ") but split has " +
                                                     std::to_string(seq.size()));
          }
          picks.assign(seq.begin() + static_cast<std::ptrdiff_t>(index),
                       seq.begin() + static_cast<std::ptrdiff_t>(index + count));
        }
        std::ofstream file;
        std::ostream* dst = &o.out;
        if (!out_path.empty() && out_path != "-") {
          file.open(out_path, std::ios::binary | std::ios::trunc);
          if (!file) throw Error(ErrorCode::io, "cannot write " + out_path);
          dst = &file;
        }
        for (const auto& p : picks) write_sample(*dst, builder.build(p.t0, p.tau_h));
        dst->flush();
        if (!*dst) throw Error(ErrorCode::io, "sample write failed");
        if (dst != &o.out) {
          o.emit({{"out", out_path}, {"samples", picks.size()}});
          o.human() << "wrote " << picks.size() << " sample(s) to " << out_path << '\n';
        }
      };
    });
  }

  // stats
  bool no_write = false;
  {
    auto* sub = app.add_subcommand("stats", "Compute normalization statistics and write the stats sidecar");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix")->required()->expected(1);
    sub->add_option("--vars", vars, "Variables (default: all)")->delimiter(',');
    sub->add_option("--config", config_path, "Task config; its train range is the default range");
    sub->add_option("--start", start, "Range start");
    sub->add_option("--end", end, "Range end (a date covers the whole day)");
    sub->add_flag("--no-write", no_write, "Do not write the sidecar");
    sub->callback([&] {
      action = [&](Output& o) {
        const Datastore store = Datastore::open(stores.front());
        const TaskConfig cfg = config_or_default(config_path);
        const TimeRange fallback = config_path.empty() ? store_extent(store) : cfg.partition.train;
        const TimeRange range = range_or(start, end, fallback);
        std::vector<std::string> names = vars;
        if (names.empty()) {
          for (const auto& v : store.header().variables) names.push_back(v.name);
        }
        std::vector<VarStats> stats;
        for (const auto& n : names) stats.push_back(global_stats(store, n, range));
        if (!no_write) write_stats_sidecar(store.prefix(), stats);
        o.emit(stats_to_json(stats));
        for (const auto& s : stats) {
          o.human() << std::left << std::setw(12) << s.var << " mean " << std::setprecision(6) << s.mean << "  std "
                    << s.std << "  n " << s.count << '\n';
        }
      };
    });
  }

  // baseline
  std::vector<int> leads;
  {
    auto* sub = app.add_subcommand("baseline", "Persistence and climatology lw-RMSE per lead time");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix (repeatable)")->required();
    sub->add_option("--config", config_path, "Task config (JSON)");
    sub->add_option("--split", split_name, "Evaluation split (default test)");
    sub->add_option("--leads", leads, "Lead times in hours (default: all leads)")->delimiter(',');
    sub->callback([&] {
      action = [&](Output& o) {
        const TaskConfig cfg = config_or_default(config_path);
        const std::vector<Datastore> opened = open_stores(stores);
        const std::vector<int> use = leads.empty() ? cfg.sample.leads() : leads;
        const BaselineReport report = evaluate_baselines(opened, cfg.sample, cfg.partition, use,
                                                         cfg.climatology_range,
                                                         parse_split(split_name.empty() ? "test" : split_name));
        o.emit(to_json(report));
        o.human() << format_table(report);
        for (const auto& w : report.warnings) o.err << "warning: " << w << '\n';
      };
    });
  }

  // evaluate
  std::string pred_path, pred_var;
  {
    auto* sub = app.add_subcommand("evaluate", "Score a forecast store against a target store");
    add_common(sub);
    sub->add_option("--store", stores, "Target store prefix")->required()->expected(1);
    sub->add_option("--pred", pred_path, "Forecast store prefix; frames are indexed by valid time")->required();
    sub->add_option("--var", var, "Target variable (default: config target)");
    sub->add_option("--pred-var", pred_var, "Forecast variable (default: same as --var)");
    sub->add_option("--config", config_path, "Task config; --split picks the range");
    sub->add_option("--split", split_name, "Split whose range is scored (default: all shared frames)");
    sub->add_option("--start", start, "Range start");
    sub->add_option("--end", end, "Range end");
    sub->callback([&] {
      action = [&](Output& o) {
        const TaskConfig cfg = config_or_default(config_path);
        const Datastore target = Datastore::open(stores.front());
        const Datastore pred = Datastore::open(pred_path);
        if (!(target.grid() == pred.grid())) throw Error(ErrorCode::invalid_argument, "forecast grid differs");
        const std::string tv = var.empty() ? cfg.sample.target_var : var;
        const std::string pv = pred_var.empty() ? tv : pred_var;
        TimeRange fallback = store_extent(pred);
        if (!split_name.empty()) fallback = cfg.partition.range(parse_split(split_name));
        const TimeRange range = range_or(start, end, fallback);

        std::vector<Field> preds, targets;
        std::vector<double> flat_p, flat_t;
        std::uint64_t skipped = 0;
        const auto [first, last] = pred.header().frames_in(range);
        for (std::int64_t t = first; t < last; ++t) {
          const auto tt = target.header().frame_at(pred.header().timestamp(t));
          if (!tt) {
            ++skipped;
            continue;
          }
          Field p = pred.read_frame(pv, t);
          Field y = target.read_frame(tv, *tt);
          const auto has_nan = [](const Field& f) {
            return std::any_of(f.values.begin(), f.values.end(), [](double v) { return std::isnan(v); });
          };
          if (has_nan(p) || has_nan(y)) {
            ++skipped;
            continue;
          }
          flat_p.insert(flat_p.end(), p.values.begin(), p.values.end());
          flat_t.insert(flat_t.end(), y.values.begin(), y.values.end());
          preds.push_back(std::move(p));
          targets.push_back(std::move(y));
        }
        if (preds.empty()) throw Error(ErrorCode::insufficient_data, "no forecast frames to score in range");
        const double score = lw_rmse(preds, targets, target.grid());
        std::vector<double> clipped = flat_t;
        for (double& v : clipped) v = std::max(0.0, v);
        const ClassRmseReport classes = class_rmse(flat_p, clipped);
        o.emit({{"var", tv}, {"lw_rmse", score}, {"n_times", preds.size()}, {"skipped", skipped},
                {"class_rmse", to_json(classes)}});
        o.human() << "lw-RMSE " << std::setprecision(6) << score << " over " << preds.size() << " frame(s)";
        if (skipped > 0) o.human() << " (" << skipped << " skipped)";
        o.human() << '\n' << format_table(classes, pv);
      };
    });
  }

  // correlate
  std::size_t n_points = 10000;
  double lat_min = -60.0, lat_max = 60.0;
  {
    auto* sub = app.add_subcommand("correlate", "Spearman correlation matrix over sampled pixels");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix (repeatable)")->required();
    sub->add_option("--vars", vars, "Variables")->required()->delimiter(',');
    sub->add_option("--n", n_points, "Number of sampled (time, pixel) points (default 10000)");
    sub->add_option("--lat-min", lat_min, "Southern band edge (default -60)");
    sub->add_option("--lat-max", lat_max, "Northern band edge (default 60)");
    sub->add_option("--start", start, "Range start");
    sub->add_option("--end", end, "Range end");
    sub->add_option("--csv", csv_path, "Also write the matrix as delimited text");
    sub->callback([&] {
      action = [&](Output& o) {
        const std::vector<Datastore> opened = open_stores(stores);
        const TimeRange range = range_or(start, end, store_extent(opened.front()));
        const CorrelationMatrix m = correlation_matrix(opened, vars, lat_min, lat_max, range, n_points, seed);
        if (!csv_path.empty()) write_text(csv_path, to_delimited(m));
        o.emit(to_json(m));
        std::ostream& t = o.human();
        t << std::setw(10) << "";
        for (const auto& v : m.vars) t << std::setw(10) << v;
        t << '\n' << std::fixed << std::setprecision(3);
        for (std::size_t i = 0; i < m.size(); ++i) {
          t << std::setw(10) << m.vars[i];
          for (std::size_t j = 0; j < m.size(); ++j) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(3) << m.at(i, j) << (m.significant[i * m.size() + j] ? "" : "*");
            t << std::setw(10) << cell.str();
          }
          t << '\n';
        }
        t << "n = " << m.n_points << "; * marks p >= 0.05\n";
      };
    });
  }

  // histogram
  int bins = 40;
  {
    auto* sub = app.add_subcommand("histogram", "Log-binned precipitation histogram with class markers");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix")->required()->expected(1);
    sub->add_option("--var", var, "Variable (default tp)");
    sub->add_option("--bins", bins, "Number of log-spaced bins (default 40)");
    sub->add_option("--start", start, "Range start");
    sub->add_option("--end", end, "Range end");
    sub->add_option("--csv", csv_path, "Also write bins as delimited text");
    sub->callback([&] {
      action = [&](Output& o) {
        const Datastore store = Datastore::open(stores.front());
        const PrecipHistogram h =
            precip_histogram(store, var.empty() ? "tp" : var, range_or(start, end, store_extent(store)), bins);
        if (!csv_path.empty()) write_text(csv_path, to_delimited(h));
        o.emit(to_json(h));
        const ClassBinning binning;
        std::ostream& t = o.human();
        t << "zero " << h.zero_count << " (clipped negatives " << h.clipped_negative << "), NaN " << h.nan_count
          << ", max " << h.max_value << '\n';
        for (int c = 0; c < kNumClasses; ++c) t << binning.labels[c] << ' ' << h.class_counts[c] << '\n';
      };
    });
  }

  // classmap
  {
    auto* sub = app.add_subcommand("classmap", "Per-pixel frequency of each precipitation class");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix")->required()->expected(1);
    sub->add_option("--var", var, "Variable (default tp)");
    sub->add_option("--start", start, "Range start");
    sub->add_option("--end", end, "Range end");
    sub->callback([&] {
      action = [&](Output& o) {
        const Datastore store = Datastore::open(stores.front());
        const ClassBinning binning;
        const auto maps =
            class_frequency_map(store, var.empty() ? "tp" : var, binning, range_or(start, end, store_extent(store)));
        o.emit(class_maps_to_json(maps, binning));
        for (int c = 0; c < kNumClasses; ++c) {
          double sum = 0.0;
          std::size_t n = 0;
          for (double v : maps[c].values) {
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
          }
          o.human() << std::left << std::setw(10) << binning.labels[c] << "mean " << std::fixed
                    << std::setprecision(3) << (n ? sum / static_cast<double>(n) : 0.0) << " %\n";
        }
      };
    });
  }

  // bench
  std::string loader_name = "both", cache_name = "warm";
  std::vector<int> workers;
  std::uint64_t epoch = 0;
  bool warmup = false;
  {
    auto* sub = app.add_subcommand("bench", "Loader throughput on the randomized sliding-window workload");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix")->required()->expected(1);
    sub->add_option("--loader", loader_name, "memmap|naive|both (default both)");
    sub->add_option("--workers", workers, "Worker counts, e.g. 1,4,8 (default $RAINSTORE_WORKERS or 1)")
        ->delimiter(',');
    sub->add_option("--epoch", epoch, "Samples per epoch (default: one pass)");
    sub->add_flag("--warmup", warmup, "Run and drop one untimed epoch first");
    sub->add_option("--cache", cache_name, "warm|cold (cold asks the kernel to drop cached pages)");
    sub->add_option("--vars", vars, "Input variables (default: all temporal)")->delimiter(',');
    sub->add_option("--config", config_path, "Task config for the window shape");
    sub->callback([&] {
      action = [&](Output& o) {
        const Datastore store = Datastore::open(stores.front());
        const TaskConfig cfg = config_or_default(config_path);
        BenchWorkload w;
        w.spec = cfg.sample;
        w.spec.input_vars = vars;
        if (w.spec.input_vars.empty()) {
          for (const auto& v : store.header().variables) {
            if (!v.is_static()) w.spec.input_vars.push_back(v.name);
          }
        }
        w.spec.static_vars.clear();
        w.spec.target_var = w.spec.input_vars.empty() ? "" : w.spec.input_vars.front();
        w.part = full_store_partition(store.header(), w.spec);
        w.epoch_size = epoch;
        w.drop_warmup = warmup;
        w.cache = parse_cache_mode(cache_name);
        std::vector<int> counts = workers.empty() ? std::vector<int>{default_workers()} : workers;

        if (loader_name == "both") {
          std::vector<BenchComparison> rows;
          json arr = json::array();
          for (int n : counts) {
            rows.push_back(compare_loaders(store.prefix(), w, n, seed));
            arr.push_back(to_json(rows.back()));
          }
          o.emit(arr.size() == 1 ? arr.front() : arr);
          o.human() << format_table(rows);
        } else {
          const LoaderKind kind = parse_loader_kind(loader_name);
          json arr = json::array();
          for (int n : counts) {
            const BenchReport r = run_bench(store.prefix(), w, n, kind, seed);
            arr.push_back(to_json(r));
            o.human() << to_string(kind) << " workers " << n << ": " << std::fixed << std::setprecision(1)
                      << r.samples_per_s << " samples/s (" << r.samples << " in " << std::setprecision(3)
                      << r.wall_s << " s)\n";
          }
          o.emit(arr.size() == 1 ? arr.front() : arr);
        }
      };
    });
  }

  // accumulate
  int k = 2;
  std::string new_name;
  {
    auto* sub = app.add_subcommand("accumulate", "Sum blocks of k frames into a coarser-cadence store");
    add_common(sub);
    sub->add_option("--store", stores, "Store prefix")->required()->expected(1);
    sub->add_option("--var", var, "Temporal variable")->required();
    sub->add_option("--k", k, "Frames per block (default 2)");
    sub->add_option("--out", out_path, "Output store prefix")->required();
    sub->add_option("--name", new_name, "Name of the accumulated variable (default: same)");
    sub->callback([&] {
      action = [&](Output& o) {
        const Datastore out_store = accumulate_time(Datastore::open(stores.front()), var, k, out_path, new_name);
        const StoreHeader& h = out_store.header();
        o.emit({{"prefix", out_path}, {"n_steps", h.n_steps}, {"time_step_s", h.time_step_s}});
        o.human() << "wrote " << out_path << ": " << h.n_steps << " steps of " << h.time_step_s << " s\n";
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  Output o{out, err, as_json};
  try {
    action(o);
  } catch (const Error& e) {
    out.flush();
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace rainstore
