#include "rainstore/bench.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <thread>

#include "rainstore/error.hpp"
#include "rainstore/rng.hpp"
#include "rainstore/store.hpp"

namespace rainstore {

std::string_view to_string(LoaderKind kind) {
  return kind == LoaderKind::memmap ? "memmap" : "naive";
}

LoaderKind parse_loader_kind(std::string_view name) {
  if (name == "memmap") return LoaderKind::memmap;
  if (name == "naive") return LoaderKind::naive;
  throw Error(ErrorCode::invalid_argument, "unknown loader '" + std::string(name) + "' (memmap|naive)");
}

std::string_view to_string(CacheMode mode) {
  return mode == CacheMode::warm ? "warm" : "cold";
}

CacheMode parse_cache_mode(std::string_view name) {
  if (name == "warm") return CacheMode::warm;
  if (name == "cold") return CacheMode::cold;
  throw Error(ErrorCode::invalid_argument, "unknown cache mode '" + std::string(name) + "' (warm|cold)");
}

PartitionSpec full_store_partition(const StoreHeader& header, const SampleSpec& spec) {
  PartitionSpec part;
  const Timestamp last = header.timestamp(header.n_steps - 1);
  part.train = {add_hours(header.time_start, spec.history_h), add_hours(last, -spec.max_lead_h)};
  part.val = {last, header.time_start};  // empty
  part.test = part.val;
  part.t0_stride_h = std::max<int>(1, static_cast<int>(header.time_step_s / 3600));
  return part;
}

namespace {

using Clock = std::chrono::steady_clock;

// Order-independent combination of per-sample word sums, keyed by the
// sample's position in the epoch.
std::uint64_t sample_checksum(std::uint64_t position, const std::byte* data, std::size_t bytes) {
  std::uint64_t sum = 0;
  std::size_t i = 0;
  for (; i + 8 <= bytes; i += 8) {
    std::uint64_t w;
    std::memcpy(&w, data + i, 8);
    sum += w;
  }
  for (; i < bytes; ++i) sum += static_cast<std::uint64_t>(data[i]) << (8 * (i % 8));
  return splitmix64(position ^ splitmix64(sum));
}

struct Plan {
  std::vector<std::int64_t> t0_frames;  // per epoch position
  std::vector<std::int64_t> offsets;    // window offsets in frames
  std::vector<std::uint64_t> var_offsets;
  std::uint64_t frame_bytes = 0;
  std::filesystem::path data_file;
};

Plan make_plan(const Datastore& store, const BenchWorkload& w, std::uint64_t seed) {
  const StoreHeader& h = store.header();
  if (w.spec.input_vars.empty()) throw Error(ErrorCode::invalid_argument, "bench workload has no input variables");
  Plan plan;
  plan.frame_bytes = h.frame_bytes();
  plan.data_file = data_path(store.prefix());
  for (const auto& name : w.spec.input_vars) {
    const VariableSpec& v = store.variable(name);
    if (v.is_static()) throw Error(ErrorCode::invalid_argument, "bench input '" + name + "' is static");
    plan.var_offsets.push_back(v.offset_bytes);
  }
  for (int off : window_offsets(w.spec)) {
    const std::int64_t s = static_cast<std::int64_t>(off) * 3600;
    if (s % h.time_step_s != 0) {
      throw Error(ErrorCode::inconsistent_time, "window offset " + std::to_string(off) + " h is off the store cadence");
    }
    plan.offsets.push_back(s / h.time_step_s);
  }
  const TimeRange extent{h.time_start, h.timestamp(h.n_steps - 1)};
  const auto indices = iter_indices(w.part, w.spec, w.split, seed, extent);
  const std::uint64_t n = w.epoch_size == 0 ? indices.size() : w.epoch_size;
  plan.t0_frames.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const auto t = h.frame_at(indices[i % indices.size()].t0);
    if (!t) throw Error(ErrorCode::inconsistent_time, "issue time is not on the store time axis");
    plan.t0_frames.push_back(*t);
  }
  return plan;
}

struct WorkerResult {
  std::uint64_t checksum = 0;
  std::uint64_t bytes = 0;
};

std::size_t window_bytes(const Plan& plan) {
  return plan.var_offsets.size() * plan.offsets.size() * plan.frame_bytes;
}

void memmap_worker(const Datastore& store, const Plan& plan, std::size_t first, std::size_t stride,
                   WorkerResult& out) {
  std::vector<std::byte> window(window_bytes(plan));
  const std::byte* base = store.bytes().data();
  for (std::size_t k = first; k < plan.t0_frames.size(); k += stride) {
    std::byte* dst = window.data();
    for (std::uint64_t var_off : plan.var_offsets) {
      for (std::int64_t off : plan.offsets) {
        const std::uint64_t t = static_cast<std::uint64_t>(plan.t0_frames[k] + off);
        std::memcpy(dst, base + var_off + t * plan.frame_bytes, plan.frame_bytes);
        dst += plan.frame_bytes;
      }
    }
    out.checksum += sample_checksum(k, window.data(), window.size());
    out.bytes += window.size();
  }
}

void naive_worker(const Plan& plan, std::size_t first, std::size_t stride, WorkerResult& out) {
  std::vector<std::byte> window(window_bytes(plan));
  for (std::size_t k = first; k < plan.t0_frames.size(); k += stride) {
    std::FILE* f = std::fopen(plan.data_file.c_str(), "rb");
    if (f == nullptr) throw Error(ErrorCode::io, "cannot open " + plan.data_file.string());
    std::byte* dst = window.data();
    for (std::uint64_t var_off : plan.var_offsets) {
      for (std::int64_t off : plan.offsets) {
        const std::uint64_t t = static_cast<std::uint64_t>(plan.t0_frames[k] + off);
        if (fseeko(f, static_cast<off_t>(var_off + t * plan.frame_bytes), SEEK_SET) != 0 ||
            std::fread(dst, 1, plan.frame_bytes, f) != plan.frame_bytes) {
          std::fclose(f);
          throw Error(ErrorCode::io, "short read from " + plan.data_file.string());
        }
        dst += plan.frame_bytes;
      }
    }
    std::fclose(f);
    out.checksum += sample_checksum(k, window.data(), window.size());
    out.bytes += window.size();
  }
}

WorkerResult run_epoch(const Datastore& store, const Plan& plan, int workers, LoaderKind loader) {
  std::vector<WorkerResult> results(static_cast<std::size_t>(workers));
  std::vector<std::exception_ptr> errors(results.size());
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        if (loader == LoaderKind::memmap) {
          memmap_worker(store, plan, static_cast<std::size_t>(w), static_cast<std::size_t>(workers), results[w]);
        } else {
          naive_worker(plan, static_cast<std::size_t>(w), static_cast<std::size_t>(workers), results[w]);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  WorkerResult total;
  for (const auto& r : results) {
    total.checksum += r.checksum;
    total.bytes += r.bytes;
  }
  return total;
}

bool drop_page_cache(const std::filesystem::path& file) {
  const int fd = ::open(file.c_str(), O_RDONLY);
  if (fd < 0) return false;
  const bool ok = ::posix_fadvise(fd, 0, 0, POSIX_FADV_DONTNEED) == 0;
  ::close(fd);
  return ok;
}

}  // namespace

BenchReport run_bench(const std::filesystem::path& store_prefix, const BenchWorkload& workload, int workers,
                      LoaderKind loader, std::uint64_t seed) {
  if (workers < 1) throw Error(ErrorCode::invalid_argument, "workers must be >= 1");
  BenchReport report;
  report.loader = loader;
  report.workers = workers;
  report.cache = workload.cache;
  report.seed = seed;
  report.window_len = workload.spec.n_timesteps();
  report.channels = static_cast<int>(workload.spec.input_vars.size());

  if (workload.cache == CacheMode::cold) report.cache_dropped = drop_page_cache(data_path(store_prefix));
  const Datastore store = Datastore::open(store_prefix);
  const Plan plan = make_plan(store, workload, seed);
  report.epoch_size = plan.t0_frames.size();

  if (workload.drop_warmup) {
    run_epoch(store, plan, workers, loader);
    report.warmup_dropped = true;
  }
  const auto start = Clock::now();
  const WorkerResult r = run_epoch(store, plan, workers, loader);
  report.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  report.samples = plan.t0_frames.size();
  report.bytes_read = r.bytes;
  report.checksum = r.checksum;
  report.samples_per_s = report.wall_s > 0.0 ? static_cast<double>(report.samples) / report.wall_s : 0.0;
  return report;
}

BenchComparison compare_loaders(const std::filesystem::path& store_prefix, const BenchWorkload& workload,
                                int workers, std::uint64_t seed) {
  BenchComparison cmp;
  // correctness gate on a short prefix of the epoch before anything is timed
  BenchWorkload gate = workload;
  gate.drop_warmup = false;
  gate.cache = CacheMode::warm;
  gate.epoch_size = std::min<std::uint64_t>(workload.epoch_size == 0 ? 64 : workload.epoch_size, 64);
  const BenchReport a = run_bench(store_prefix, gate, 1, LoaderKind::memmap, seed);
  const BenchReport b = run_bench(store_prefix, gate, 1, LoaderKind::naive, seed);
  if (a.checksum != b.checksum) {
    throw Error(ErrorCode::checksum_mismatch, "memmap and naive loaders read different bytes");
  }

  cmp.naive = run_bench(store_prefix, workload, workers, LoaderKind::naive, seed);
  cmp.memmap = run_bench(store_prefix, workload, workers, LoaderKind::memmap, seed);
  if (cmp.memmap.checksum != cmp.naive.checksum || cmp.memmap.bytes_read != cmp.naive.bytes_read) {
    throw Error(ErrorCode::checksum_mismatch, "memmap and naive loaders read different bytes");
  }
  cmp.speedup = cmp.naive.samples_per_s > 0.0 ? cmp.memmap.samples_per_s / cmp.naive.samples_per_s : 0.0;
  return cmp;
}

nlohmann::json to_json(const BenchReport& r) {
  std::ostringstream checksum;
  checksum << std::hex << std::setw(16) << std::setfill('0') << r.checksum;
  return {{"loader", to_string(r.loader)},
          {"workers", r.workers},
          {"samples", r.samples},
          {"samples_per_s", r.samples_per_s},
          {"wall_s", r.wall_s},
          {"bytes_read", r.bytes_read},
          {"checksum", checksum.str()},
          {"cache", to_string(r.cache)},
          {"cache_dropped", r.cache_dropped},
          {"warmup_dropped", r.warmup_dropped},
          {"config",
           {{"window_len", r.window_len}, {"channels", r.channels}, {"epoch_size", r.epoch_size}, {"seed", r.seed}}}};
}

nlohmann::json to_json(const BenchComparison& cmp) {
  return {{"memmap", to_json(cmp.memmap)}, {"naive", to_json(cmp.naive)}, {"speedup", cmp.speedup}};
}

std::string format_table(const std::vector<BenchComparison>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "workers" << std::right << std::setw(14) << "memmap/s" << std::setw(14)
      << "naive/s" << std::setw(10) << "speedup" << '\n';
  out << std::fixed;
  for (const auto& r : rows) {
    out << std::left << std::setw(8) << r.memmap.workers << std::right << std::setprecision(1) << std::setw(14)
        << r.memmap.samples_per_s << std::setw(14) << r.naive.samples_per_s << std::setprecision(2)
        << std::setw(9) << r.speedup << "x\n";
  }
  return out.str();
}

}  // namespace rainstore
