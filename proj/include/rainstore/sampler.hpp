#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rainstore/grid.hpp"
#include "rainstore/normalize.hpp"
#include "rainstore/store.hpp"
#include "rainstore/time.hpp"

namespace rainstore {

// Recipe for one training sample. Defaults follow the benchmark task setup:
// 12 h of history every 3 h, forecasts every 24 h up to 120 h.
struct SampleSpec {
  std::vector<std::string> input_vars;
  std::vector<std::string> static_vars;
  int history_h = 12;
  int step_h = 3;
  int lead_interval_h = 24;
  int max_lead_h = 120;
  std::string target_var = "tp";

  void validate() const;
  int n_leads() const { return max_lead_h / lead_interval_h; }
  std::vector<int> leads() const;
  int n_timesteps() const { return history_h / step_h + 1; }
  // temporal inputs, static inputs, then hour/day/month
  int n_channels() const {
    return static_cast<int>(input_vars.size() + static_vars.size()) + 3;
  }
};

// Hour offsets -T, -T+dt, ..., 0.
std::vector<int> window_offsets(const SampleSpec& spec);
std::vector<float> lead_onehot(int tau_h, const SampleSpec& spec);

enum class Split { train, val, test };
std::string_view to_string(Split split);
Split parse_split(std::string_view name);

// Issue-time (t0) ranges per split; t0 values lie on a stride counted from
// each range start.
struct PartitionSpec {
  TimeRange train{};
  TimeRange val{};
  TimeRange test{};
  int t0_stride_h = 1;

  static PartitionSpec benchmark_default();
  const TimeRange& range(Split split) const;
  // Smallest gap between consecutive splits' t0 ranges that rules out overlap.
  static int margin_h(const SampleSpec& spec) { return spec.max_lead_h + spec.history_h; }
};

struct SampleIndex {
  Timestamp t0;
  int tau_h;
  friend bool operator==(const SampleIndex&, const SampleIndex&) = default;
};

struct PartitionViolation {
  Split split;
  SampleIndex sample;
  Timestamp frame;  // shared frame timestamp
  Split other_split;
  SampleIndex other_sample;

  std::string describe() const;
};

// Checks that no two splits touch a common frame timestamp (inputs or target).
// Returns the earliest violating sample, if any.
std::optional<PartitionViolation> validate_partition(const PartitionSpec& part, const SampleSpec& spec);

// Every (t0, tau) of a split exactly once, shuffled deterministically by seed.
// With an extent, samples touching frames outside it are dropped.
std::vector<SampleIndex> iter_indices(const PartitionSpec& part, const SampleSpec& spec, Split split,
                                      std::uint64_t seed,
                                      const std::optional<TimeRange>& extent = std::nullopt);

// Model-ready sample. inputs is laid out [timestep][channel][lat][lon], oldest
// timestep first.
struct Sample {
  Timestamp t0{};
  int tau_h = 0;
  int n_timesteps = 0;
  int n_channels = 0;
  GridSpec grid;
  std::vector<std::string> channel_names;
  std::vector<float> inputs;
  std::vector<float> lead_onehot;
  std::vector<float> target;  // mm/h, not standardized
  bool valid = true;          // false when the target holds NaN

  float input(int timestep, int channel, std::size_t cell) const {
    return inputs[(static_cast<std::size_t>(timestep) * n_channels + channel) * grid.cells() + cell];
  }
};

// Latitude or longitude of every cell center, in degrees. Used for the "lat"
// and "lon" static channels when no store provides them.
Field coordinate_field(const GridSpec& grid, std::string_view name);

// Resolves variables across one or more stores sharing a grid and composes
// samples. Immutable after construction; build() is thread-safe.
class SampleBuilder {
 public:
  SampleBuilder(std::vector<Datastore> stores, SampleSpec spec, Normalization norm = {});

  Sample build(Timestamp t0, int tau_h) const;
  const SampleSpec& spec() const { return spec_; }
  const GridSpec& grid() const { return stores_.front().grid(); }
  // Intersection of the time axes of all stores holding temporal variables.
  TimeRange extent() const;

 private:
  struct Source {
    std::size_t store;
    std::string name;
  };
  const Datastore& store_of(const Source& s) const { return stores_[s.store]; }
  std::int64_t frame_index(const Source& s, Timestamp ts) const;

  std::vector<Datastore> stores_;
  SampleSpec spec_;
  Normalization norm_;
  std::vector<Source> inputs_;
  std::vector<std::optional<Source>> statics_;  // nullopt: synthesized lat/lon
  Source target_;
};

Sample build_sample(std::span<const Datastore> stores, const SampleSpec& spec, Timestamp t0, int tau_h,
                    const Normalization& norm = {});

// One JSON header line followed by little-endian float32 payload:
// inputs, lead one-hot, target.
void write_sample(std::ostream& out, const Sample& sample);

// Precipitation intensity classes with right-open intervals.
enum class PrecipClass : int { slight = 0, moderate = 1, heavy = 2, violent = 3 };
inline constexpr int kNumClasses = 4;

struct ClassBinning {
  std::array<double, 3> edges{2.0, 10.0, 50.0};  // mm/h
  std::array<std::string, 4> labels{"slight", "moderate", "heavy", "violent"};

  PrecipClass classify(double value) const;
};

PrecipClass class_of(double value, const ClassBinning& binning = {});
std::string_view class_label(PrecipClass cls);

struct PixelIndex {
  std::int64_t t;
  int lat;
  int lon;
  PrecipClass cls;
  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

// Exactly n_per_class pixels per class, uniformly without replacement within
// each class. NaN pixels are skipped.
std::vector<PixelIndex> balanced_pixel_indices(const Datastore& store, std::string_view target_var,
                                               const ClassBinning& binning, std::uint64_t n_per_class,
                                               std::uint64_t seed, const TimeRange& range);

// n pixels uniformly without replacement from all non-NaN pixels in range.
std::vector<PixelIndex> unbalanced_pixel_indices(const Datastore& store, std::string_view target_var,
                                                 const ClassBinning& binning, std::uint64_t n,
                                                 std::uint64_t seed, const TimeRange& range);

}  // namespace rainstore
