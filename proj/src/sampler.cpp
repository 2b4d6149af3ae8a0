#include "rainstore/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <ostream>
#include <unordered_map>

#include "rainstore/error.hpp"
#include "rainstore/rng.hpp"

namespace rainstore {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Spec and window arithmetic

void SampleSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, "sample spec: " + msg); };
  if (history_h < 0) fail("history_h must be >= 0");
  if (step_h <= 0) fail("step_h must be > 0");
  if (history_h % step_h != 0) fail("history_h must be a multiple of step_h");
  if (lead_interval_h <= 0) fail("lead_interval_h must be > 0");
  if (max_lead_h < lead_interval_h) fail("max_lead_h must be >= lead_interval_h");
  if (max_lead_h % lead_interval_h != 0) fail("max_lead_h must be a multiple of lead_interval_h");
  if (target_var.empty()) fail("target_var is empty");
}

std::vector<int> SampleSpec::leads() const {
  std::vector<int> out;
  for (int tau = lead_interval_h; tau <= max_lead_h; tau += lead_interval_h) out.push_back(tau);
  return out;
}

std::vector<int> window_offsets(const SampleSpec& spec) {
  spec.validate();
  std::vector<int> out;
  for (int h = -spec.history_h; h <= 0; h += spec.step_h) out.push_back(h);
  return out;
}

std::vector<float> lead_onehot(int tau_h, const SampleSpec& spec) {
  spec.validate();
  if (tau_h < spec.lead_interval_h || tau_h > spec.max_lead_h || tau_h % spec.lead_interval_h != 0) {
    throw Error(ErrorCode::invalid_argument, "lead time " + std::to_string(tau_h) +
                                                 " h is not on the lead lattice (every " +
                                                 std::to_string(spec.lead_interval_h) + " h up to " +
                                                 std::to_string(spec.max_lead_h) + " h)");
  }
  std::vector<float> v(static_cast<std::size_t>(spec.n_leads()), 0.0f);
  v[static_cast<std::size_t>(tau_h / spec.lead_interval_h - 1)] = 1.0f;
  return v;
}

// ---------------------------------------------------------------------------
// Partitions

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw Error(ErrorCode::invalid_argument, "unknown split '" + std::string(name) + "'");
}

PartitionSpec PartitionSpec::benchmark_default() {
  PartitionSpec p;
  p.train = parse_time_range("2016-04-01", "2017-12-31");
  p.val = parse_time_range("2018-01-07", "2018-12-30");
  p.test = parse_time_range("2019-01-06", "2019-12-31");
  p.t0_stride_h = 1;
  return p;
}

const TimeRange& PartitionSpec::range(Split split) const {
  switch (split) {
    case Split::train: return train;
    case Split::val: return val;
    case Split::test: return test;
  }
  return train;
}

namespace {

constexpr std::array<Split, 3> kSplits{Split::train, Split::val, Split::test};

std::vector<Timestamp> issue_times(const TimeRange& range, int stride_h) {
  if (stride_h <= 0) throw Error(ErrorCode::invalid_argument, "t0 stride must be > 0");
  std::vector<Timestamp> out;
  for (Timestamp t = range.start; t <= range.end; t += std::chrono::hours(stride_h)) out.push_back(t);
  return out;
}

// Frame timestamps touched by one sample: the input window and the target.
template <class F>
void for_each_touched(Timestamp t0, int tau_h, const std::vector<int>& offsets, F&& f) {
  for (int off : offsets) f(add_hours(t0, off));
  f(add_hours(t0, tau_h));
}

std::string format_sample(const SampleIndex& s) {
  return "(t0=" + format_timestamp(s.t0) + ", tau=" + std::to_string(s.tau_h) + "h)";
}

}  // namespace

std::string PartitionViolation::describe() const {
  return std::string(to_string(split)) + " sample " + format_sample(sample) + " touches frame " +
         format_timestamp(frame) + " also touched by " + std::string(to_string(other_split)) + " sample " +
         format_sample(other_sample);
}

std::optional<PartitionViolation> validate_partition(const PartitionSpec& part, const SampleSpec& spec) {
  const std::vector<int> offsets = window_offsets(spec);
  const std::vector<int> leads = spec.leads();

  // first sample (in t0, tau order) touching each frame, per split
  std::array<std::unordered_map<std::int64_t, SampleIndex>, 3> touched;
  struct Entry {
    SampleIndex sample;
    int split;
  };
  std::vector<Entry> all;
  for (int s = 0; s < 3; ++s) {
    for (Timestamp t0 : issue_times(part.range(kSplits[s]), part.t0_stride_h)) {
      for (int tau : leads) {
        const SampleIndex idx{t0, tau};
        all.push_back({idx, s});
        for_each_touched(t0, tau, offsets, [&](Timestamp ts) {
          touched[s].try_emplace(ts.time_since_epoch().count(), idx);
        });
      }
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.sample.t0 != b.sample.t0) return a.sample.t0 < b.sample.t0;
    if (a.sample.tau_h != b.sample.tau_h) return a.sample.tau_h < b.sample.tau_h;
    return a.split < b.split;
  });

  for (const Entry& e : all) {
    std::optional<PartitionViolation> found;
    for_each_touched(e.sample.t0, e.sample.tau_h, offsets, [&](Timestamp ts) {
      if (found) return;
      for (int other = 0; other < 3; ++other) {
        if (other == e.split) continue;
        const auto it = touched[other].find(ts.time_since_epoch().count());
        if (it != touched[other].end()) {
          found = PartitionViolation{kSplits[e.split], e.sample, ts, kSplits[other], it->second};
          return;
        }
      }
    });
    if (found) return found;
  }
  return std::nullopt;
}

std::vector<SampleIndex> iter_indices(const PartitionSpec& part, const SampleSpec& spec, Split split,
                                      std::uint64_t seed, const std::optional<TimeRange>& extent) {
  spec.validate();
  std::vector<SampleIndex> out;
  for (Timestamp t0 : issue_times(part.range(split), part.t0_stride_h)) {
    for (int tau : spec.leads()) {
      if (extent) {
        const Timestamp first = add_hours(t0, -spec.history_h);
        const Timestamp target = add_hours(t0, tau);
        if (!extent->contains(first) || !extent->contains(t0) || !extent->contains(target)) continue;
      }
      out.push_back({t0, tau});
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::insufficient_data, "split '" + std::string(to_string(split)) + "' has no samples");
  }
  Engine rng(derive_seed(seed, "iter_indices"));
  shuffle(std::span<SampleIndex>(out), rng);
  return out;
}

// ---------------------------------------------------------------------------
// Sample composition

SampleBuilder::SampleBuilder(std::vector<Datastore> stores, SampleSpec spec, Normalization norm)
    : stores_(std::move(stores)), spec_(std::move(spec)), norm_(std::move(norm)) {
  spec_.validate();
  if (stores_.empty()) throw Error(ErrorCode::invalid_argument, "no stores given");
  for (std::size_t i = 1; i < stores_.size(); ++i) {
    if (!(stores_[i].grid() == stores_[0].grid())) {
      throw Error(ErrorCode::invalid_argument, "stores " + stores_[0].prefix().string() + " and " +
                                                   stores_[i].prefix().string() + " use different grids");
    }
  }
  auto find = [&](const std::string& name, bool want_static) -> std::optional<Source> {
    for (std::size_t i = 0; i < stores_.size(); ++i) {
      const VariableSpec* v = stores_[i].header().find(name);
      if (v != nullptr && v->is_static() == want_static) return Source{i, name};
    }
    return std::nullopt;
  };

  for (const auto& name : spec_.input_vars) {
    auto src = find(name, false);
    if (!src) throw Error(ErrorCode::unknown_variable, "temporal input '" + name + "' not found in any store");
    const std::int64_t step = store_of(*src).header().time_step_s;
    if ((static_cast<std::int64_t>(spec_.step_h) * 3600) % step != 0) {
      throw Error(ErrorCode::inconsistent_time, "store cadence of '" + name + "' (" + std::to_string(step) +
                                                    " s) does not divide the input step of " +
                                                    std::to_string(spec_.step_h) + " h");
    }
    inputs_.push_back(*src);
  }
  for (const auto& name : spec_.static_vars) {
    auto src = find(name, true);
    if (!src && name != "lat" && name != "lon") {
      throw Error(ErrorCode::unknown_variable, "static input '" + name + "' not found in any store");
    }
    statics_.push_back(src);
  }
  auto target = find(spec_.target_var, false);
  if (!target) {
    throw Error(ErrorCode::unknown_variable, "target '" + spec_.target_var + "' not found in any store");
  }
  target_ = *target;
}

TimeRange SampleBuilder::extent() const {
  std::optional<TimeRange> r;
  auto merge = [&](const Datastore& s) {
    const auto& h = s.header();
    const TimeRange own{h.time_start, h.timestamp(h.n_steps - 1)};
    if (!r) {
      r = own;
    } else {
      r->start = std::max(r->start, own.start);
      r->end = std::min(r->end, own.end);
    }
  };
  for (const auto& src : inputs_) merge(store_of(src));
  merge(store_of(target_));
  return *r;
}

std::int64_t SampleBuilder::frame_index(const Source& s, Timestamp ts) const {
  const auto t = store_of(s).header().frame_at(ts);
  if (!t) {
    throw Error(ErrorCode::out_of_range,
                "missing frame of '" + s.name + "' at " + format_timestamp(ts) + " in " +
                    store_of(s).prefix().string());
  }
  return *t;
}

Field coordinate_field(const GridSpec& g, std::string_view name) {
  if (name != "lat" && name != "lon") {
    throw Error(ErrorCode::unknown_variable, "no coordinate field named '" + std::string(name) + "'");
  }
  Field f(g, 0.0, "degrees");
  for (int i = 0; i < g.n_lat; ++i) {
    for (int j = 0; j < g.n_lon; ++j) f.at(i, j) = name == "lat" ? g.lat_centers[i] : g.lon_centers[j];
  }
  return f;
}

Sample SampleBuilder::build(Timestamp t0, int tau_h) const {
  Sample s;
  s.t0 = t0;
  s.tau_h = tau_h;
  s.lead_onehot = lead_onehot(tau_h, spec_);
  s.n_timesteps = spec_.n_timesteps();
  s.n_channels = spec_.n_channels();
  s.grid = grid();
  const std::size_t cells = s.grid.cells();

  s.channel_names = spec_.input_vars;
  s.channel_names.insert(s.channel_names.end(), spec_.static_vars.begin(), spec_.static_vars.end());
  s.channel_names.insert(s.channel_names.end(), {"hour", "day", "month"});

  // validate every frame before reading any
  const std::vector<int> offsets = window_offsets(spec_);
  std::vector<std::vector<std::int64_t>> frames(inputs_.size());
  for (std::size_t v = 0; v < inputs_.size(); ++v) {
    for (int off : offsets) frames[v].push_back(frame_index(inputs_[v], add_hours(t0, off)));
  }
  const std::int64_t target_frame = frame_index(target_, add_hours(t0, tau_h));

  std::vector<std::vector<float>> statics;
  for (std::size_t k = 0; k < statics_.size(); ++k) {
    const std::string& name = spec_.static_vars[k];
    Field raw = statics_[k] ? store_of(*statics_[k]).read_frame(name, 0) : coordinate_field(grid(), name);
    Field norm = norm_.apply(raw, name);
    statics.emplace_back(norm.values.begin(), norm.values.end());
  }
  const CalendarFields cal = calendar_fields(t0);
  const float time_features[3] = {static_cast<float>(cal.hour / 24.0), static_cast<float>((cal.day - 1) / 31.0),
                                  static_cast<float>((cal.month - 1) / 12.0)};

  s.inputs.resize(static_cast<std::size_t>(s.n_timesteps) * s.n_channels * cells);
  auto channel = [&](int step, int c) {
    return s.inputs.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(step) * s.n_channels + c) * cells);
  };
  for (int step = 0; step < s.n_timesteps; ++step) {
    int c = 0;
    for (std::size_t v = 0; v < inputs_.size(); ++v, ++c) {
      Field raw = store_of(inputs_[v]).read_frame(inputs_[v].name, frames[v][step]);
      Field norm = norm_.apply(raw, inputs_[v].name);
      std::transform(norm.values.begin(), norm.values.end(), channel(step, c),
                     [](double x) { return static_cast<float>(x); });
    }
    for (const auto& st : statics) {
      std::copy(st.begin(), st.end(), channel(step, c));
      ++c;
    }
    for (float tf : time_features) {
      std::fill_n(channel(step, c), cells, tf);
      ++c;
    }
  }

  auto target = store_of(target_).frame_view(target_.name, target_frame);
  s.target.assign(target.begin(), target.end());
  s.valid = std::none_of(s.target.begin(), s.target.end(), [](float v) { return std::isnan(v); });
  return s;
}

Sample build_sample(std::span<const Datastore> stores, const SampleSpec& spec, Timestamp t0, int tau_h,
                    const Normalization& norm) {
  return SampleBuilder(std::vector<Datastore>(stores.begin(), stores.end()), spec, norm).build(t0, tau_h);
}

void write_sample(std::ostream& out, const Sample& sample) {
  const json header{{"format", "rainstore-sample"},
                    {"version", 1},
                    {"t0", format_timestamp(sample.t0)},
                    {"tau_h", sample.tau_h},
                    {"valid", sample.valid},
                    {"inputs_shape", {sample.n_timesteps, sample.n_channels, sample.grid.n_lat, sample.grid.n_lon}},
                    {"lead_onehot_len", sample.lead_onehot.size()},
                    {"target_shape", {sample.grid.n_lat, sample.grid.n_lon}},
                    {"channels", sample.channel_names}};
  out << header.dump() << '\n';
  auto put = [&](const std::vector<float>& v) {
    for (float x : v) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(x);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      char buf[4];
      std::memcpy(buf, &bits, 4);
      out.write(buf, 4);
    }
  };
  put(sample.inputs);
  put(sample.lead_onehot);
  put(sample.target);
}

// ---------------------------------------------------------------------------
// Classes and pixel sampling

PrecipClass ClassBinning::classify(double value) const {
  if (std::isnan(value) || !std::isfinite(value) || value < 0.0) {
    throw Error(ErrorCode::invalid_argument,
                "precipitation value " + std::to_string(value) + " cannot be classified");
  }
  int c = 0;
  while (c < 3 && value >= edges[static_cast<std::size_t>(c)]) ++c;
  return static_cast<PrecipClass>(c);
}

PrecipClass class_of(double value, const ClassBinning& binning) { return binning.classify(value); }

std::string_view class_label(PrecipClass cls) {
  static const ClassBinning defaults;
  return defaults.labels[static_cast<std::size_t>(cls)];
}

namespace {

// Visits every non-NaN pixel of var in range in (t, lat, lon) order.
template <class F>
void scan_pixels(const Datastore& store, std::string_view var, const ClassBinning& binning,
                 const TimeRange& range, F&& f) {
  const VariableSpec& spec = store.variable(var);
  if (spec.is_static()) throw Error(ErrorCode::invalid_argument, "pixel sampling needs a temporal variable");
  const auto [first, last] = store.header().frames_in(range);
  const int n_lon = store.grid().n_lon;
  for (std::int64_t t = first; t < last; ++t) {
    const auto frame = store.frame_view(var, t);
    for (std::size_t i = 0; i < frame.size(); ++i) {
      const float v = frame[i];
      if (std::isnan(v)) continue;
      f(PixelIndex{t, static_cast<int>(i / n_lon), static_cast<int>(i % n_lon), binning.classify(v)});
    }
  }
}

}  // namespace

std::vector<PixelIndex> balanced_pixel_indices(const Datastore& store, std::string_view target_var,
                                               const ClassBinning& binning, std::uint64_t n_per_class,
                                               std::uint64_t seed, const TimeRange& range) {
  if (n_per_class == 0) return {};
  std::array<std::uint64_t, kNumClasses> counts{};
  scan_pixels(store, target_var, binning, range, [&](const PixelIndex& p) { ++counts[static_cast<int>(p.cls)]; });

  std::array<std::vector<std::uint64_t>, kNumClasses> ranks;
  for (int c = 0; c < kNumClasses; ++c) {
    if (counts[c] < n_per_class) {
      throw Error(ErrorCode::insufficient_data,
                  "class '" + binning.labels[c] + "' has " + std::to_string(counts[c]) + " pixels, " +
                      std::to_string(n_per_class) + " requested");
    }
    Engine rng(derive_seed(seed, "balanced/" + binning.labels[c]));
    ranks[c] = sample_without_replacement(counts[c], n_per_class, rng);
  }

  std::vector<PixelIndex> out;
  out.reserve(n_per_class * kNumClasses);
  std::array<std::uint64_t, kNumClasses> seen{};
  std::array<std::size_t, kNumClasses> next{};
  scan_pixels(store, target_var, binning, range, [&](const PixelIndex& p) {
    const int c = static_cast<int>(p.cls);
    if (next[c] < ranks[c].size() && ranks[c][next[c]] == seen[c]) {
      out.push_back(p);
      ++next[c];
    }
    ++seen[c];
  });
  return out;
}

std::vector<PixelIndex> unbalanced_pixel_indices(const Datastore& store, std::string_view target_var,
                                                 const ClassBinning& binning, std::uint64_t n,
                                                 std::uint64_t seed, const TimeRange& range) {
  if (n == 0) return {};
  std::uint64_t total = 0;
  scan_pixels(store, target_var, binning, range, [&](const PixelIndex&) { ++total; });
  if (total < n) {
    throw Error(ErrorCode::insufficient_data,
                std::to_string(total) + " pixels available, " + std::to_string(n) + " requested");
  }
  Engine rng(derive_seed(seed, "unbalanced"));
  const auto ranks = sample_without_replacement(total, n, rng);
  std::vector<PixelIndex> out;
  out.reserve(n);
  std::uint64_t seen = 0;
  std::size_t next = 0;
  scan_pixels(store, target_var, binning, range, [&](const PixelIndex& p) {
    if (next < ranks.size() && ranks[next] == seen) {
      out.push_back(p);
      ++next;
    }
    ++seen;
  });
  return out;
}

}  // namespace rainstore
