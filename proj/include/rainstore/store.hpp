#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rainstore/grid.hpp"
#include "rainstore/time.hpp"

namespace rainstore {

inline constexpr const char* kStoreMagic = "RAINSTORE";
inline constexpr int kStoreVersion = 1;
inline constexpr const char* kDtypeF32 = "float32le";
inline constexpr std::uint64_t kRegionAlignment = 64;

enum class VariableKind { temporal, static_field };

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::temporal;
  std::optional<int> level_hpa;
  std::string units;
  std::uint64_t offset_bytes = 0;
  std::string dtype = kDtypeF32;

  bool is_static() const { return kind == VariableKind::static_field; }
  friend bool operator==(const VariableSpec&, const VariableSpec&) = default;
};

struct StoreHeader {
  std::string magic = kStoreMagic;
  int version = kStoreVersion;
  GridSpec grid;
  Timestamp time_start{};
  std::int64_t time_step_s = 3600;
  std::int64_t n_steps = 1;
  std::vector<VariableSpec> variables;

  const VariableSpec* find(std::string_view name) const;
  std::uint64_t frame_bytes() const { return grid.cells() * sizeof(float); }
  std::uint64_t region_bytes(const VariableSpec& var) const;
  // max(offset + region) over variables
  std::uint64_t data_bytes() const;

  Timestamp timestamp(std::int64_t t) const {
    return time_start + Seconds(time_step_s * t);
  }
  // Frame index of an exact frame timestamp, if it lies on the time axis.
  std::optional<std::int64_t> frame_at(Timestamp ts) const;
  // Half-open [first, last) frame indices whose timestamps fall in range.
  std::pair<std::int64_t, std::int64_t> frames_in(const TimeRange& range) const;

  friend bool operator==(const StoreHeader&, const StoreHeader&) = default;
};

// Packs variables back to back at 64-byte aligned offsets, in order.
void assign_offsets(StoreHeader& header);

nlohmann::json header_to_json(const StoreHeader& header);
StoreHeader header_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

std::filesystem::path header_path(const std::filesystem::path& prefix);
std::filesystem::path data_path(const std::filesystem::path& prefix);
std::filesystem::path stats_path(const std::filesystem::path& prefix);

// Read-only mapping of a whole file. Pages are faulted in on first touch.
class MappedFile {
 public:
  explicit MappedFile(const std::filesystem::path& path);
  ~MappedFile();
  MappedFile(const MappedFile&) = delete;
  MappedFile& operator=(const MappedFile&) = delete;

  std::span<const std::byte> bytes() const { return {data_, size_}; }
  std::size_t size() const { return size_; }

 private:
  const std::byte* data_ = nullptr;
  std::size_t size_ = 0;
};

// Opened store. Copies share the same read-only mapping and may be used from
// any number of threads.
class Datastore {
 public:
  static Datastore open(const std::filesystem::path& prefix);

  const StoreHeader& header() const { return header_; }
  const GridSpec& grid() const { return header_.grid; }
  const std::filesystem::path& prefix() const { return prefix_; }
  bool has(std::string_view name) const { return header_.find(name) != nullptr; }
  const VariableSpec& variable(std::string_view name) const;

  // Zero-copy view of one frame. Static variables ignore t.
  std::span<const float> frame_view(std::string_view name, std::int64_t t) const;
  Field read_frame(std::string_view name, std::int64_t t) const;
  // Validates every index before reading any frame.
  std::vector<Field> read_window(std::string_view name, std::span<const std::int64_t> t_indices) const;

  // The whole data file.
  std::span<const std::byte> bytes() const { return map_->bytes(); }

  // Byte offset of frame t inside the data file.
  std::uint64_t frame_offset(const VariableSpec& var, std::int64_t t) const;

 private:
  Datastore(std::filesystem::path prefix, StoreHeader header, std::shared_ptr<const MappedFile> map)
      : prefix_(std::move(prefix)), header_(std::move(header)), map_(std::move(map)) {}

  void check_frame(const VariableSpec& var, std::int64_t t) const;

  std::filesystem::path prefix_;
  StoreHeader header_;
  std::shared_ptr<const MappedFile> map_;
};

// Single-writer construction of a store. The data file is created at full size
// up front; regions never written read back as zeros.
class StoreWriter {
 public:
  StoreWriter(std::filesystem::path prefix, StoreHeader header);
  ~StoreWriter();
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;

  const StoreHeader& header() const { return header_; }
  void write_frame(std::string_view name, std::int64_t t, std::span<const float> values);
  void write_frame(std::string_view name, std::int64_t t, std::span<const double> values);
  void write_static(std::string_view name, std::span<const float> values) {
    write_frame(name, 0, values);
  }
  // Flushes and closes; returns the opened store.
  Datastore finish();

 private:
  std::filesystem::path prefix_;
  StoreHeader header_;
  int fd_ = -1;
};

// Ingest directory: per variable a "<name>.var.json" descriptor plus raw
// little-endian float32 payload file(s); optional "dataset.json" fixes the
// variable order. See docs/FORMATS.md.
struct IngestVariable {
  VariableSpec spec;
  GridSpec grid;
  Timestamp time_start{};
  std::int64_t time_step_s = 0;
  std::int64_t n_steps = 1;
  std::vector<std::filesystem::path> files;
};

std::vector<IngestVariable> read_ingest_descriptors(const std::filesystem::path& dir);
void write_ingest_descriptor(const std::filesystem::path& dir, const IngestVariable& var);

// Converts an ingest directory into a store on `grid`, regridding bilinearly
// where the native grid differs.
Datastore convert(const std::filesystem::path& ingest_dir, const std::filesystem::path& out_prefix,
                  const GridSpec& grid);

// Sums blocks of k consecutive frames of a temporal variable (left to right,
// float32) into a new store at out_prefix with time step multiplied by k.
// Static variables are carried over.
Datastore accumulate_time(const Datastore& store, std::string_view var, int k,
                          const std::filesystem::path& out_prefix,
                          std::string out_name = {});

}  // namespace rainstore
