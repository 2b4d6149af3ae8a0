#include "rainstore/store.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "rainstore/error.hpp"

namespace rainstore {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t align_up(std::uint64_t x, std::uint64_t a) { return (x + a - 1) / a * a; }

std::string errno_text() { return std::strerror(errno); }

const char* kind_name(VariableKind kind) {
  return kind == VariableKind::temporal ? "temporal" : "static";
}

VariableKind parse_kind(const std::string& s) {
  if (s == "temporal") return VariableKind::temporal;
  if (s == "static") return VariableKind::static_field;
  throw Error(ErrorCode::format, "unknown variable kind '" + s + "'");
}

const char* layout_name(VariableKind kind) {
  return kind == VariableKind::temporal ? "t,lat,lon" : "lat,lon";
}

float load_le_float(const std::byte* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  return std::bit_cast<float>(bits);
}

void store_le_floats(std::span<const float> in, std::vector<std::byte>& out) {
  out.resize(in.size() * sizeof(float));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), in.data(), out.size());
  } else {
    for (std::size_t i = 0; i < in.size(); ++i) {
      const std::uint32_t bits = __builtin_bswap32(std::bit_cast<std::uint32_t>(in[i]));
      std::memcpy(out.data() + i * 4, &bits, 4);
    }
  }
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::format, where + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::format, where + ": bad field '" + key + "': " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Header

const VariableSpec* StoreHeader::find(std::string_view name) const {
  for (const auto& v : variables) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

std::uint64_t StoreHeader::region_bytes(const VariableSpec& var) const {
  return var.is_static() ? frame_bytes() : frame_bytes() * static_cast<std::uint64_t>(n_steps);
}

std::uint64_t StoreHeader::data_bytes() const {
  std::uint64_t end = 0;
  for (const auto& v : variables) end = std::max(end, v.offset_bytes + region_bytes(v));
  return end;
}

std::optional<std::int64_t> StoreHeader::frame_at(Timestamp ts) const {
  const std::int64_t delta = (ts - time_start).count();
  if (delta < 0 || delta % time_step_s != 0) return std::nullopt;
  const std::int64_t t = delta / time_step_s;
  if (t >= n_steps) return std::nullopt;
  return t;
}

std::pair<std::int64_t, std::int64_t> StoreHeader::frames_in(const TimeRange& range) const {
  auto ceil_div = [](std::int64_t a, std::int64_t b) {
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
  };
  auto floor_div = [](std::int64_t a, std::int64_t b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
  };
  std::int64_t first = ceil_div((range.start - time_start).count(), time_step_s);
  std::int64_t last = floor_div((range.end - time_start).count(), time_step_s) + 1;
  first = std::clamp<std::int64_t>(first, 0, n_steps);
  last = std::clamp<std::int64_t>(last, 0, n_steps);
  if (last < first) last = first;
  return {first, last};
}

void assign_offsets(StoreHeader& header) {
  std::uint64_t offset = 0;
  for (auto& v : header.variables) {
    v.offset_bytes = offset;
    offset = align_up(offset + header.region_bytes(v), kRegionAlignment);
  }
}

json grid_to_json(const GridSpec& grid) {
  return json{{"n_lat", grid.n_lat},
              {"n_lon", grid.n_lon},
              {"res_deg", grid.res_deg},
              {"lat_centers", grid.lat_centers},
              {"lon_centers", grid.lon_centers}};
}

GridSpec grid_from_json(const json& j) {
  const std::string where = "grid";
  if (!j.contains("lat_centers") && j.contains("res_deg")) {
    return make_grid(require<double>(j, "res_deg", where));
  }
  GridSpec grid = grid_from_centers(require<std::vector<double>>(j, "lat_centers", where),
                                    require<std::vector<double>>(j, "lon_centers", where));
  if (j.contains("res_deg")) grid.res_deg = j.at("res_deg").get<double>();
  if ((j.contains("n_lat") && j.at("n_lat").get<int>() != grid.n_lat) ||
      (j.contains("n_lon") && j.at("n_lon").get<int>() != grid.n_lon)) {
    throw Error(ErrorCode::format, "grid: n_lat/n_lon disagree with center lists");
  }
  return grid;
}

json header_to_json(const StoreHeader& header) {
  json vars = json::array();
  for (const auto& v : header.variables) {
    vars.push_back({{"name", v.name},
                    {"kind", kind_name(v.kind)},
                    {"level_hpa", v.level_hpa ? json(*v.level_hpa) : json(nullptr)},
                    {"units", v.units},
                    {"offset_bytes", v.offset_bytes},
                    {"dtype", v.dtype},
                    {"layout", layout_name(v.kind)}});
  }
  return json{{"magic", header.magic},
              {"version", header.version},
              {"grid", grid_to_json(header.grid)},
              {"time_start", format_timestamp(header.time_start)},
              {"time_step_s", header.time_step_s},
              {"n_steps", header.n_steps},
              {"variables", vars}};
}

StoreHeader header_from_json(const json& j) {
  const std::string where = "store header";
  StoreHeader h;
  h.magic = require<std::string>(j, "magic", where);
  if (h.magic != kStoreMagic) {
    throw Error(ErrorCode::bad_magic, "bad magic '" + h.magic + "', expected " + kStoreMagic);
  }
  h.version = require<int>(j, "version", where);
  if (h.version != kStoreVersion) {
    throw Error(ErrorCode::bad_version, "unsupported store version " + std::to_string(h.version));
  }
  h.grid = grid_from_json(require<json>(j, "grid", where));
  h.time_start = parse_timestamp(require<std::string>(j, "time_start", where));
  h.time_step_s = require<std::int64_t>(j, "time_step_s", where);
  h.n_steps = require<std::int64_t>(j, "n_steps", where);
  if (h.n_steps < 1 || h.time_step_s <= 0) {
    throw Error(ErrorCode::format, "store header: n_steps must be >= 1 and time_step_s > 0");
  }
  std::set<std::string> seen;
  for (const auto& jv : require<json>(j, "variables", where)) {
    VariableSpec v;
    v.name = require<std::string>(jv, "name", where);
    v.kind = parse_kind(require<std::string>(jv, "kind", where));
    if (jv.contains("level_hpa") && !jv.at("level_hpa").is_null()) {
      v.level_hpa = jv.at("level_hpa").get<int>();
    }
    v.units = jv.value("units", "");
    v.offset_bytes = require<std::uint64_t>(jv, "offset_bytes", where);
    v.dtype = require<std::string>(jv, "dtype", where);
    if (v.dtype != kDtypeF32) {
      throw Error(ErrorCode::unsupported_dtype,
                  "variable '" + v.name + "' has unsupported dtype '" + v.dtype + "'");
    }
    if (jv.contains("layout") && jv.at("layout").get<std::string>() != layout_name(v.kind)) {
      throw Error(ErrorCode::format, "variable '" + v.name + "' has unexpected layout");
    }
    if (v.offset_bytes % kRegionAlignment != 0) {
      throw Error(ErrorCode::format, "variable '" + v.name + "' offset is not 64-byte aligned");
    }
    if (!seen.insert(v.name).second) {
      throw Error(ErrorCode::format, "duplicate variable '" + v.name + "'");
    }
    h.variables.push_back(std::move(v));
  }
  // regions must not overlap
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  for (const auto& v : h.variables) spans.emplace_back(v.offset_bytes, v.offset_bytes + h.region_bytes(v));
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].first < spans[i - 1].second) {
      throw Error(ErrorCode::format, "store header: variable regions overlap");
    }
  }
  return h;
}

fs::path header_path(const fs::path& prefix) { return fs::path(prefix.string() + ".json"); }
fs::path data_path(const fs::path& prefix) { return fs::path(prefix.string() + ".bin"); }
fs::path stats_path(const fs::path& prefix) { return fs::path(prefix.string() + ".stats.json"); }

// ---------------------------------------------------------------------------
// Mapping

MappedFile::MappedFile(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::io, "cannot open " + path.string() + ": " + errno_text());
  struct stat st {};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    throw Error(ErrorCode::io, "cannot stat " + path.string() + ": " + errno_text());
  }
  size_ = static_cast<std::size_t>(st.st_size);
  if (size_ > 0) {
    void* p = ::mmap(nullptr, size_, PROT_READ, MAP_SHARED, fd, 0);
    if (p == MAP_FAILED) {
      ::close(fd);
      throw Error(ErrorCode::io, "cannot map " + path.string() + ": " + errno_text());
    }
    data_ = static_cast<const std::byte*>(p);
  }
  // the mapping keeps the file referenced
  ::close(fd);
}

MappedFile::~MappedFile() {
  if (data_ != nullptr) ::munmap(const_cast<std::byte*>(data_), size_);
}

// ---------------------------------------------------------------------------
// Datastore

Datastore Datastore::open(const fs::path& prefix) {
  StoreHeader header = header_from_json(read_json_file(header_path(prefix)));
  auto map = std::make_shared<const MappedFile>(data_path(prefix));
  if (map->size() != header.data_bytes()) {
    throw Error(ErrorCode::size_mismatch, "data file " + data_path(prefix).string() + " has " +
                                              std::to_string(map->size()) + " bytes, header expects " +
                                              std::to_string(header.data_bytes()));
  }
  return Datastore(prefix, std::move(header), std::move(map));
}

const VariableSpec& Datastore::variable(std::string_view name) const {
  const VariableSpec* v = header_.find(name);
  if (v == nullptr) {
    throw Error(ErrorCode::unknown_variable,
                "unknown variable '" + std::string(name) + "' in store " + prefix_.string());
  }
  return *v;
}

void Datastore::check_frame(const VariableSpec& var, std::int64_t t) const {
  if (var.is_static()) return;
  if (t < 0 || t >= header_.n_steps) {
    throw Error(ErrorCode::out_of_range, "frame " + std::to_string(t) + " of '" + var.name +
                                             "' outside [0, " + std::to_string(header_.n_steps) + ")");
  }
}

std::uint64_t Datastore::frame_offset(const VariableSpec& var, std::int64_t t) const {
  return var.offset_bytes + (var.is_static() ? 0 : static_cast<std::uint64_t>(t) * header_.frame_bytes());
}

std::span<const float> Datastore::frame_view(std::string_view name, std::int64_t t) const {
  static_assert(std::endian::native == std::endian::little,
                "zero-copy frame views require a little-endian host");
  const VariableSpec& var = variable(name);
  check_frame(var, t);
  const std::byte* p = map_->bytes().data() + frame_offset(var, t);
  return {reinterpret_cast<const float*>(p), header_.grid.cells()};
}

Field Datastore::read_frame(std::string_view name, std::int64_t t) const {
  const VariableSpec& var = variable(name);
  check_frame(var, t);
  const std::byte* p = map_->bytes().data() + frame_offset(var, t);
  std::vector<double> values(header_.grid.cells());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = load_le_float(p + i * sizeof(float));
  return Field(header_.grid, std::move(values), var.units);
}

std::vector<Field> Datastore::read_window(std::string_view name,
                                          std::span<const std::int64_t> t_indices) const {
  const VariableSpec& var = variable(name);
  for (std::int64_t t : t_indices) check_frame(var, t);
  std::vector<Field> out;
  out.reserve(t_indices.size());
  for (std::int64_t t : t_indices) out.push_back(read_frame(name, t));
  return out;
}

// ---------------------------------------------------------------------------
// Writer

StoreWriter::StoreWriter(fs::path prefix, StoreHeader header)
    : prefix_(std::move(prefix)), header_(std::move(header)) {
  if (header_.n_steps < 1 || header_.time_step_s <= 0) {
    throw Error(ErrorCode::invalid_argument, "n_steps must be >= 1 and time_step_s > 0");
  }
  std::set<std::string> names;
  for (const auto& v : header_.variables) {
    if (!names.insert(v.name).second) {
      throw Error(ErrorCode::invalid_argument, "duplicate variable '" + v.name + "'");
    }
  }
  assign_offsets(header_);
  if (prefix_.has_parent_path()) fs::create_directories(prefix_.parent_path());
  fd_ = ::open(data_path(prefix_).c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::io, "cannot create " + data_path(prefix_).string() + ": " + errno_text());
  }
  if (::ftruncate(fd_, static_cast<off_t>(header_.data_bytes())) != 0) {
    ::close(fd_);
    throw Error(ErrorCode::io, "cannot size " + data_path(prefix_).string() + ": " + errno_text());
  }
  write_text_file(header_path(prefix_), header_to_json(header_).dump(2) + "\n");
}

StoreWriter::~StoreWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void StoreWriter::write_frame(std::string_view name, std::int64_t t, std::span<const float> values) {
  const VariableSpec* var = header_.find(name);
  if (var == nullptr) throw Error(ErrorCode::unknown_variable, "unknown variable '" + std::string(name) + "'");
  if (!var->is_static() && (t < 0 || t >= header_.n_steps)) {
    throw Error(ErrorCode::out_of_range, "frame " + std::to_string(t) + " out of range");
  }
  if (values.size() != header_.grid.cells()) {
    throw Error(ErrorCode::invalid_argument, "frame size does not match grid");
  }
  std::vector<std::byte> bytes;
  store_le_floats(values, bytes);
  off_t offset = static_cast<off_t>(var->offset_bytes +
                                    (var->is_static() ? 0 : static_cast<std::uint64_t>(t) * header_.frame_bytes()));
  std::size_t done = 0;
  while (done < bytes.size()) {
    const ssize_t n = ::pwrite(fd_, bytes.data() + done, bytes.size() - done, offset + static_cast<off_t>(done));
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::io, "write failed: " + errno_text());
    }
    done += static_cast<std::size_t>(n);
  }
}

void StoreWriter::write_frame(std::string_view name, std::int64_t t, std::span<const double> values) {
  std::vector<float> f(values.begin(), values.end());
  write_frame(name, t, std::span<const float>(f));
}

Datastore StoreWriter::finish() {
  if (fd_ >= 0) {
    if (::close(fd_) != 0) {
      fd_ = -1;
      throw Error(ErrorCode::io, "close failed: " + errno_text());
    }
    fd_ = -1;
  }
  return Datastore::open(prefix_);
}

// ---------------------------------------------------------------------------
// Ingest

namespace {

IngestVariable parse_descriptor(const json& j, const fs::path& dir, const std::string& where) {
  IngestVariable v;
  v.spec.name = require<std::string>(j, "name", where);
  v.spec.kind = parse_kind(require<std::string>(j, "kind", where));
  if (j.contains("level_hpa") && !j.at("level_hpa").is_null()) {
    v.spec.level_hpa = j.at("level_hpa").get<int>();
  }
  v.spec.units = j.value("units", "");
  const std::string dtype = j.value("dtype", std::string(kDtypeF32));
  if (dtype != kDtypeF32) {
    throw Error(ErrorCode::unsupported_dtype, where + ": unsupported dtype '" + dtype + "'");
  }
  v.grid = grid_from_json(require<json>(j, "grid", where));
  if (v.spec.kind == VariableKind::temporal) {
    v.time_start = parse_timestamp(require<std::string>(j, "time_start", where));
    v.time_step_s = require<std::int64_t>(j, "time_step_s", where);
    v.n_steps = require<std::int64_t>(j, "n_steps", where);
    if (v.n_steps < 1 || v.time_step_s <= 0) {
      throw Error(ErrorCode::format, where + ": n_steps must be >= 1 and time_step_s > 0");
    }
  }
  for (const auto& f : require<std::vector<std::string>>(j, "files", where)) {
    v.files.push_back(dir / f);
  }
  if (v.files.empty()) throw Error(ErrorCode::format, where + ": no payload files");
  return v;
}

// Streams consecutive frames out of a list of payload files.
class FrameReader {
 public:
  FrameReader(const IngestVariable& var) : var_(var), cells_(var.grid.cells()) {
    std::uintmax_t total = 0;
    for (const auto& f : var.files) {
      if (!fs::exists(f)) throw Error(ErrorCode::io, "missing payload file " + f.string());
      total += fs::file_size(f);
    }
    const std::uintmax_t expected = static_cast<std::uintmax_t>(var.n_steps) * cells_ * sizeof(float);
    if (total != expected) {
      throw Error(ErrorCode::size_mismatch, "payload of '" + var.spec.name + "' has " +
                                                std::to_string(total) + " bytes, descriptor implies " +
                                                std::to_string(expected));
    }
  }

  std::vector<float> next() {
    std::vector<std::byte> raw(cells_ * sizeof(float));
    std::size_t filled = 0;
    while (filled < raw.size()) {
      if (!in_.is_open() || in_.peek() == std::char_traits<char>::eof()) {
        if (in_.is_open()) in_.close();
        if (file_ >= var_.files.size()) throw Error(ErrorCode::format, "payload ended early");
        in_.open(var_.files[file_++], std::ios::binary);
        if (!in_) throw Error(ErrorCode::io, "cannot open payload " + var_.files[file_ - 1].string());
        continue;
      }
      in_.read(reinterpret_cast<char*>(raw.data() + filled), static_cast<std::streamsize>(raw.size() - filled));
      filled += static_cast<std::size_t>(in_.gcount());
      in_.clear(in_.rdstate() & ~std::ios::failbit & ~std::ios::eofbit);
    }
    std::vector<float> out(cells_);
    for (std::size_t i = 0; i < cells_; ++i) out[i] = load_le_float(raw.data() + i * sizeof(float));
    return out;
  }

 private:
  const IngestVariable& var_;
  std::size_t cells_;
  std::size_t file_ = 0;
  std::ifstream in_;
};

}  // namespace

std::vector<IngestVariable> read_ingest_descriptors(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "ingest directory not found: " + dir.string());
  const std::string suffix = ".var.json";
  std::vector<std::string> names;
  const fs::path manifest = dir / "dataset.json";
  if (fs::exists(manifest)) {
    names = require<std::vector<std::string>>(read_json_file(manifest), "variables", manifest.string());
  } else {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string file = entry.path().filename().string();
      if (file.size() > suffix.size() && file.ends_with(suffix)) {
        names.push_back(file.substr(0, file.size() - suffix.size()));
      }
    }
    std::sort(names.begin(), names.end());
  }
  if (names.empty()) throw Error(ErrorCode::format, "no variable descriptors in " + dir.string());
  std::vector<IngestVariable> out;
  for (const auto& name : names) {
    const fs::path p = dir / (name + suffix);
    IngestVariable v = parse_descriptor(read_json_file(p), dir, p.string());
    if (v.spec.name != name) {
      throw Error(ErrorCode::format, p.string() + ": name field '" + v.spec.name + "' does not match file name");
    }
    out.push_back(std::move(v));
  }
  return out;
}

void write_ingest_descriptor(const fs::path& dir, const IngestVariable& var) {
  json j{{"name", var.spec.name},
         {"kind", kind_name(var.spec.kind)},
         {"level_hpa", var.spec.level_hpa ? json(*var.spec.level_hpa) : json(nullptr)},
         {"units", var.spec.units},
         {"dtype", kDtypeF32},
         {"grid", var.grid.is_regular_global() ? json{{"res_deg", var.grid.res_deg}} : grid_to_json(var.grid)}};
  if (var.spec.kind == VariableKind::temporal) {
    j["time_start"] = format_timestamp(var.time_start);
    j["time_step_s"] = var.time_step_s;
    j["n_steps"] = var.n_steps;
  }
  json files = json::array();
  for (const auto& f : var.files) files.push_back(f.filename().string());
  j["files"] = files;
  write_text_file(dir / (var.spec.name + ".var.json"), j.dump(2) + "\n");
}

Datastore convert(const fs::path& ingest_dir, const fs::path& out_prefix, const GridSpec& grid) {
  std::vector<IngestVariable> vars = read_ingest_descriptors(ingest_dir);

  StoreHeader header;
  header.grid = grid;
  const IngestVariable* reference = nullptr;
  std::vector<std::string> offenders;
  for (const auto& v : vars) {
    if (v.spec.kind != VariableKind::temporal) continue;
    if (reference == nullptr) {
      reference = &v;
    } else if (v.time_start != reference->time_start || v.time_step_s != reference->time_step_s ||
               v.n_steps != reference->n_steps) {
      offenders.push_back(v.spec.name);
    }
  }
  if (!offenders.empty()) {
    std::string list;
    for (const auto& n : offenders) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::inconsistent_time, "time axis of [" + list + "] differs from '" +
                                                  reference->spec.name + "'");
  }
  if (reference != nullptr) {
    header.time_start = reference->time_start;
    header.time_step_s = reference->time_step_s;
    header.n_steps = reference->n_steps;
  }
  for (const auto& v : vars) {
    VariableSpec spec = v.spec;
    spec.offset_bytes = 0;
    spec.dtype = kDtypeF32;
    header.variables.push_back(spec);
  }

  StoreWriter writer(out_prefix, header);
  for (const auto& v : vars) {
    FrameReader reader(v);
    const bool same_grid = v.grid == grid;
    for (std::int64_t t = 0; t < v.n_steps; ++t) {
      std::vector<float> frame = reader.next();
      if (same_grid) {
        writer.write_frame(v.spec.name, t, std::span<const float>(frame));
      } else {
        Field src(v.grid, std::vector<double>(frame.begin(), frame.end()), v.spec.units);
        Field dst = regrid_bilinear(src, grid);
        writer.write_frame(v.spec.name, t, std::span<const double>(dst.values));
      }
    }
  }
  return writer.finish();
}

Datastore accumulate_time(const Datastore& store, std::string_view var, int k,
                          const fs::path& out_prefix, std::string out_name) {
  const VariableSpec& spec = store.variable(var);
  if (spec.is_static()) {
    throw Error(ErrorCode::invalid_argument, "cannot accumulate static variable '" + spec.name + "'");
  }
  const StoreHeader& in = store.header();
  if (k < 1 || in.n_steps % k != 0) {
    throw Error(ErrorCode::invalid_argument, "n_steps " + std::to_string(in.n_steps) +
                                                 " is not divisible by " + std::to_string(k));
  }
  if (out_name.empty()) out_name = spec.name;

  StoreHeader header;
  header.grid = in.grid;
  header.time_start = in.time_start;
  header.time_step_s = in.time_step_s * k;
  header.n_steps = in.n_steps / k;
  VariableSpec acc = spec;
  acc.name = out_name;
  header.variables.push_back(acc);
  for (const auto& v : in.variables) {
    if (v.is_static() && v.name != out_name) header.variables.push_back(v);
  }

  StoreWriter writer(out_prefix, header);
  const std::size_t cells = in.grid.cells();
  std::vector<float> sum(cells);
  for (std::int64_t j = 0; j < header.n_steps; ++j) {
    auto first = store.frame_view(spec.name, j * k);
    std::copy(first.begin(), first.end(), sum.begin());
    for (int m = 1; m < k; ++m) {
      auto frame = store.frame_view(spec.name, j * k + m);
      for (std::size_t i = 0; i < cells; ++i) sum[i] += frame[i];
    }
    writer.write_frame(out_name, j, std::span<const float>(sum));
  }
  for (const auto& v : in.variables) {
    if (v.is_static() && v.name != out_name) {
      writer.write_static(v.name, store.frame_view(v.name, 0));
    }
  }
  return writer.finish();
}

}  // namespace rainstore
