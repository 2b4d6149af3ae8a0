#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rainstore/sampler.hpp"

namespace rainstore {

enum class LoaderKind { memmap, naive };
enum class CacheMode { warm, cold };

std::string_view to_string(LoaderKind kind);
LoaderKind parse_loader_kind(std::string_view name);
std::string_view to_string(CacheMode mode);
CacheMode parse_cache_mode(std::string_view name);

// Randomized sliding-window workload: the (t0, tau) sequence of one split,
// each sample materializing its input window for every input variable.
struct BenchWorkload {
  SampleSpec spec;
  PartitionSpec part;
  Split split = Split::train;
  std::uint64_t epoch_size = 0;  // 0: one pass over the split; larger values wrap around
  bool drop_warmup = false;      // run one untimed epoch first
  CacheMode cache = CacheMode::warm;
};

// Partition whose train split covers every t0 with a full window and all
// leads inside the store's time axis. Used for benchmark stores.
PartitionSpec full_store_partition(const StoreHeader& header, const SampleSpec& spec);

struct BenchReport {
  LoaderKind loader = LoaderKind::memmap;
  int workers = 1;
  std::uint64_t samples = 0;
  double samples_per_s = 0.0;
  double wall_s = 0.0;
  std::uint64_t bytes_read = 0;
  std::uint64_t checksum = 0;
  CacheMode cache = CacheMode::warm;
  bool cache_dropped = false;   // cold mode: whether the page-cache drop advice succeeded
  bool warmup_dropped = false;
  int window_len = 0;           // timesteps per sample
  int channels = 0;             // temporal input variables
  std::uint64_t epoch_size = 0;
  std::uint64_t seed = 0;
};

BenchReport run_bench(const std::filesystem::path& store_prefix, const BenchWorkload& workload, int workers,
                      LoaderKind loader, std::uint64_t seed);

struct BenchComparison {
  BenchReport memmap;
  BenchReport naive;
  double speedup = 0.0;  // memmap samples/s over naive samples/s
};

// Runs both loaders and fails with checksum_mismatch when they read
// different bytes.
BenchComparison compare_loaders(const std::filesystem::path& store_prefix, const BenchWorkload& workload,
                                int workers, std::uint64_t seed);

nlohmann::json to_json(const BenchReport& report);
nlohmann::json to_json(const BenchComparison& cmp);
// Rows are worker counts; columns memmap, naive and speedup.
std::string format_table(const std::vector<BenchComparison>& rows);

}  // namespace rainstore
