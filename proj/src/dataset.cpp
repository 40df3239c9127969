#include "latentprobe/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <iterator>
#include <limits>
#include <cmath>
#include <fstream>
#include <tuple>

#include <fmt/format.h>

#include "latentprobe/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace latentprobe {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
  }
  return v;
}

void write_bytes(const fs::path& path, const char* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(data, static_cast<std::streamsize>(n));
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

std::vector<char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(fmt::format("read failed for '{}'", path.string()));
  return buf;
}

template <typename T>
void write_f32(const fs::path& path, const T* values, std::size_t n) {
  std::vector<std::uint32_t> words(n);
  for (std::size_t i = 0; i < n; ++i) {
    words[i] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  write_bytes(path, reinterpret_cast<const char*>(words.data()), n * 4);
}

std::vector<float> read_f32(const fs::path& path, std::uint64_t declared_bytes,
                            const std::string& shape) {
  const auto buf = read_bytes(path);
  if (buf.size() != declared_bytes) {
    throw ValidationError(fmt::format("{}: expected {} = {} bytes, found {}",
                                      path.filename().string(), shape, declared_bytes,
                                      buf.size()));
  }
  std::vector<float> out(buf.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t w;
    std::memcpy(&w, buf.data() + 4 * i, 4);
    out[i] = std::bit_cast<float>(to_little_endian(w));
  }
  return out;
}

std::string compact_time(const std::string& iso) {
  std::string s;
  for (char c : iso) {
    if (c != '-' && c != ':' && c != 'Z') s.push_back(c);
  }
  return s;
}

std::string field_file_name(const FieldEntry& e) {
  return fmt::format("field_{}_{}_{}.f32", e.variable,
                     e.level_hpa ? std::to_string(*e.level_hpa) : "sfc",
                     e.time ? compact_time(*e.time) : "static");
}

auto field_key(const FieldEntry& e) { return std::tie(e.variable, e.level_hpa, e.time); }

json array_json(const ArrayEntry& a) { return json{{"file", a.file}, {"bytes", a.bytes}}; }

ArrayEntry array_from(const json& j) {
  return ArrayEntry{j.at("file").get<std::string>(), j.at("bytes").get<std::uint64_t>()};
}

void check_array_name(const std::string& file) {
  // Array files must live directly inside the dataset directory.
  if (file.empty() || file.find('/') != std::string::npos || file.find('\\') != std::string::npos ||
      file == "." || file == "..") {
    throw ValidationError(fmt::format("invalid array file name '{}'", file));
  }
}

double positive_rate(const LabelVector& labels) {
  if (labels.empty()) return 0.0;
  const auto pos = std::count(labels.begin(), labels.end(), std::uint8_t{1});
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

void check_field(const FieldGrid& f) {
  if (!valid_concept_name(f.variable)) {
    throw ValidationError(fmt::format("invalid field variable name '{}'", f.variable));
  }
  if (f.values.size() == 0) throw ValidationError("field " + describe(f) + " is empty");
}

FieldEntry field_entry(const FieldGrid& f) {
  FieldEntry e;
  e.variable = f.variable;
  e.units = std::string(units_tag(f.units));
  e.level_hpa = f.level_hpa;
  if (f.time) e.time = format_utc(*f.time);
  e.n_lat = static_cast<std::size_t>(f.n_lat());
  e.n_lon = static_cast<std::size_t>(f.n_lon());
  e.array = {field_file_name(e), static_cast<std::uint64_t>(e.n_lat * e.n_lon * 4)};
  return e;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  const std::string text = m.to_json().dump(2) + "\n";
  write_bytes(dir / kManifestName, text.data(), text.size());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

}  // namespace

bool valid_concept_name(const std::string& name) {
  return !name.empty() && std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

void GridSpec::validate() const {
  if (n_lat < 1) throw ValidationError("grid.n_lat must be >= 1");
  if (n_lon < 1) throw ValidationError("grid.n_lon must be >= 1");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ValidationError("grid.resolution must be positive");
  }
  if (n_levels != 1 && n_levels != 3) throw ValidationError("grid.n_levels must be 1 or 3");
  if (!std::isfinite(lat_start) || !std::isfinite(lon_start)) {
    throw ValidationError("grid origin must be finite");
  }
}

RowCoord RowIndex::coord(std::size_t row) const {
  RowCoord c;
  c.lon = row % n_lon_;
  row /= n_lon_;
  c.lat = row % n_lat_;
  row /= n_lat_;
  c.level = row % n_levels_;
  c.time = row / n_levels_;
  return c;
}

std::size_t RowIndex::row(const RowCoord& c) const {
  return ((c.time * n_levels_ + c.level) * n_lat_ + c.lat) * n_lon_ + c.lon;
}

void ProbeDataset::validate() const {
  grid.validate();
  if (timestamps.empty()) throw ValidationError("timestamps must not be empty");
  if (!std::is_sorted(timestamps.begin(), timestamps.end()) ||
      std::adjacent_find(timestamps.begin(), timestamps.end()) != timestamps.end()) {
    throw ValidationError("timestamps must be strictly increasing");
  }
  const std::size_t expected = timestamps.size() * grid.n_levels * grid.cells();
  if (rows() != expected) {
    throw ValidationError(fmt::format(
        "embeddings: {} rows, expected timestamps x levels x lat x lon = {}", rows(), expected));
  }
  if (dim() == 0) throw ValidationError("embeddings: dimension must be >= 1");
  if (!embeddings.allFinite()) throw ValidationError("embeddings: non-finite value");
  for (const auto& [name, c] : concepts) {
    if (!valid_concept_name(name)) throw ValidationError(fmt::format("invalid concept name '{}'", name));
    if (c.labels.size() != rows()) {
      throw ValidationError(fmt::format("concept length mismatch: '{}' has {} labels, expected {}",
                                        name, c.labels.size(), rows()));
    }
    if (std::any_of(c.labels.begin(), c.labels.end(), [](auto v) { return v > 1; })) {
      throw ValidationError(fmt::format("concept '{}': labels must be 0 or 1", name));
    }
  }
  for (const auto& f : fields) check_field(f);
}

const Concept& ProbeDataset::concept_named(const std::string& name) const {
  auto it = concepts.find(name);
  if (it == concepts.end()) {
    std::string available;
    for (const auto& [n, _] : concepts) available += (available.empty() ? "" : ", ") + n;
    throw ValidationError(fmt::format("unknown concept '{}'; available: {}", name,
                                      available.empty() ? "(none)" : available));
  }
  return it->second;
}

std::vector<std::size_t> ProbeDataset::select_rows(std::optional<std::size_t> level) const {
  if (level && *level >= grid.n_levels) {
    throw ValidationError(fmt::format("level {} out of range (dataset has {} levels)", *level,
                                      grid.n_levels));
  }
  std::vector<std::size_t> out;
  const auto idx = row_index();
  out.reserve(level ? rows() / grid.n_levels : rows());
  for (std::size_t r = 0; r < rows(); ++r) {
    if (!level || idx.coord(r).level == *level) out.push_back(r);
  }
  return out;
}

const FieldGrid* ProbeDataset::find_field(const std::string& variable,
                                          std::optional<int> level_hpa,
                                          std::optional<UtcInstant> time) const {
  const FieldGrid* fallback = nullptr;
  for (const auto& f : fields) {
    if (f.variable != variable || f.level_hpa != level_hpa) continue;
    if (f.time == time) return &f;
    if (!f.time) fallback = &f;
  }
  return fallback;
}

json Manifest::to_json() const {
  json concepts_j = json::array();
  for (const auto& c : concepts) {
    concepts_j.push_back({{"name", c.name},
                          {"title", c.title},
                          {"file", c.array.file},
                          {"bytes", c.array.bytes},
                          {"positive_rate", c.positive_rate},
                          {"provenance", c.provenance}});
  }
  json fields_j = json::array();
  for (const auto& f : fields) {
    fields_j.push_back({{"variable", f.variable},
                        {"units", f.units},
                        {"level_hpa", f.level_hpa ? json(*f.level_hpa) : json(nullptr)},
                        {"time", f.time ? json(*f.time) : json(nullptr)},
                        {"n_lat", f.n_lat},
                        {"n_lon", f.n_lon},
                        {"file", f.array.file},
                        {"bytes", f.array.bytes}});
  }
  return json{{"format_version", format_version},
              {"dtype", dtype},
              {"n_rows", n_rows},
              {"dim", dim},
              {"grid",
               {{"n_lat", grid.n_lat},
                {"n_lon", grid.n_lon},
                {"lat_start", grid.lat_start},
                {"lon_start", grid.lon_start},
                {"resolution", grid.resolution},
                {"n_levels", grid.n_levels}}},
              {"timestamps", timestamps},
              {"embeddings", array_json(embeddings)},
              {"concepts", concepts_j},
              {"fields", fields_j},
              {"metadata", metadata}};
}

Manifest Manifest::from_json(const json& j) {
  Manifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kFormatVersion) {
      throw ValidationError(fmt::format("unsupported format_version {} (supported: {})",
                                        m.format_version, kFormatVersion));
    }
    m.dtype = j.at("dtype").get<std::string>();
    m.n_rows = j.at("n_rows").get<std::size_t>();
    m.dim = j.at("dim").get<std::size_t>();
    const auto& g = j.at("grid");
    m.grid.n_lat = g.at("n_lat").get<std::size_t>();
    m.grid.n_lon = g.at("n_lon").get<std::size_t>();
    m.grid.lat_start = g.at("lat_start").get<double>();
    m.grid.lon_start = g.at("lon_start").get<double>();
    m.grid.resolution = g.at("resolution").get<double>();
    m.grid.n_levels = g.at("n_levels").get<std::size_t>();
    m.timestamps = j.at("timestamps").get<std::vector<std::string>>();
    m.embeddings = array_from(j.at("embeddings"));
    for (const auto& c : j.value("concepts", json::array())) {
      ConceptEntry e;
      e.name = c.at("name").get<std::string>();
      e.title = c.value("title", e.name);
      e.array = array_from(c);
      e.positive_rate = c.at("positive_rate").get<double>();
      e.provenance = c.value("provenance", json::object());
      m.concepts.push_back(std::move(e));
    }
    for (const auto& f : j.value("fields", json::array())) {
      FieldEntry e;
      e.variable = f.at("variable").get<std::string>();
      e.units = f.at("units").get<std::string>();
      if (!f.at("level_hpa").is_null()) e.level_hpa = f.at("level_hpa").get<int>();
      if (!f.at("time").is_null()) e.time = f.at("time").get<std::string>();
      e.n_lat = f.at("n_lat").get<std::size_t>();
      e.n_lon = f.at("n_lon").get<std::size_t>();
      e.array = array_from(f);
      m.fields.push_back(std::move(e));
    }
    m.metadata = j.value("metadata", json::object());
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed manifest: {}", e.what()));
  }
  return m;
}

Manifest save_dataset(const ProbeDataset& ds, const fs::path& dir) {
  ds.validate();
  ensure_dir(dir);

  Manifest m;
  m.n_rows = ds.rows();
  m.dim = ds.dim();
  m.grid = ds.grid;
  for (auto t : ds.timestamps) m.timestamps.push_back(format_utc(t));
  m.metadata = ds.metadata;

  m.embeddings = {"embeddings.f32", static_cast<std::uint64_t>(m.n_rows * m.dim * 4)};
  write_f32(dir / m.embeddings.file, ds.embeddings.data(),
            static_cast<std::size_t>(ds.embeddings.size()));

  for (const auto& [name, c] : ds.concepts) {
    ConceptEntry e{name, c.title.empty() ? name : c.title,
                   {"concept_" + name + ".u8", c.labels.size()}, positive_rate(c.labels),
                   c.provenance};
    write_bytes(dir / e.array.file, reinterpret_cast<const char*>(c.labels.data()),
                c.labels.size());
    m.concepts.push_back(std::move(e));
  }

  for (const auto& f : ds.fields) {
    auto e = field_entry(f);
    write_f32(dir / e.array.file, f.values.data(), static_cast<std::size_t>(f.values.size()));
    m.fields.push_back(std::move(e));
  }
  std::sort(m.fields.begin(), m.fields.end(),
            [](const auto& a, const auto& b) { return field_key(a) < field_key(b); });

  write_manifest(dir, m);
  return m;
}

Manifest load_manifest(const fs::path& dir) {
  const auto path = dir / kManifestName;
  if (!fs::exists(path)) throw IoError(fmt::format("no manifest at '{}'", path.string()));
  const auto buf = read_bytes(path);
  json j;
  try {
    j = json::parse(buf.begin(), buf.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("malformed manifest: {}", e.what()));
  }
  return Manifest::from_json(j);
}

ProbeDataset load_dataset(const fs::path& dir) {
  const Manifest m = load_manifest(dir);
  if (m.dtype != "float32-le") throw ValidationError(fmt::format("unsupported dtype '{}'", m.dtype));

  ProbeDataset ds;
  ds.grid = m.grid;
  ds.grid.validate();
  for (const auto& t : m.timestamps) ds.timestamps.push_back(parse_utc(t));
  ds.metadata = m.metadata;

  const std::size_t expected_rows = m.timestamps.size() * m.grid.n_levels * m.grid.cells();
  if (m.n_rows != expected_rows) {
    throw ValidationError(fmt::format("manifest n_rows {} != timestamps x levels x lat x lon = {}",
                                      m.n_rows, expected_rows));
  }
  const std::uint64_t emb_bytes = static_cast<std::uint64_t>(m.n_rows) * m.dim * 4;
  if (m.embeddings.bytes != emb_bytes) {
    throw ValidationError(fmt::format("manifest declares {} embedding bytes, expected {}x{}x4 = {}",
                                      m.embeddings.bytes, m.n_rows, m.dim, emb_bytes));
  }
  check_array_name(m.embeddings.file);
  auto raw = read_f32(dir / m.embeddings.file, emb_bytes, fmt::format("{}x{}x4", m.n_rows, m.dim));
  ds.embeddings = Eigen::Map<const FloatMatrix>(raw.data(), static_cast<Eigen::Index>(m.n_rows),
                                                static_cast<Eigen::Index>(m.dim));
  if (!ds.embeddings.allFinite()) throw ValidationError("embeddings: non-finite value");

  for (const auto& c : m.concepts) {
    check_array_name(c.array.file);
    if (c.array.bytes != m.n_rows) {
      throw ValidationError(fmt::format("concept '{}': declares {} bytes, expected N x 1 = {}",
                                        c.name, c.array.bytes, m.n_rows));
    }
    if (!(c.positive_rate >= 0.0 && c.positive_rate <= 1.0)) {
      throw ValidationError(fmt::format("concept '{}': positive_rate outside [0,1]", c.name));
    }
    const auto buf = read_bytes(dir / c.array.file);
    if (buf.size() != m.n_rows) {
      throw ValidationError(fmt::format("{}: expected {}x1 = {} bytes, found {}", c.array.file,
                                        m.n_rows, m.n_rows, buf.size()));
    }
    Concept concept_data{c.title, LabelVector(buf.begin(), buf.end()), c.provenance};
    ds.concepts.emplace(c.name, std::move(concept_data));
  }

  for (const auto& e : m.fields) {
    check_array_name(e.array.file);
    const std::uint64_t bytes = static_cast<std::uint64_t>(e.n_lat) * e.n_lon * 4;
    if (e.array.bytes != bytes) {
      throw ValidationError(fmt::format("field {}: declares {} bytes, expected {}x{}x4 = {}",
                                        e.array.file, e.array.bytes, e.n_lat, e.n_lon, bytes));
    }
    auto vals = read_f32(dir / e.array.file, bytes, fmt::format("{}x{}x4", e.n_lat, e.n_lon));
    FieldGrid f;
    f.variable = e.variable;
    f.units = parse_units(e.units);
    f.level_hpa = e.level_hpa;
    if (e.time) f.time = parse_utc(*e.time);
    f.values = Eigen::Map<const FloatMatrix>(vals.data(), static_cast<Eigen::Index>(e.n_lat),
                                             static_cast<Eigen::Index>(e.n_lon))
                   .cast<double>();
    ds.fields.push_back(std::move(f));
  }

  ds.validate();
  return ds;
}

void store_field(const fs::path& dir, const FieldGrid& field) {
  check_field(field);
  Manifest m = load_manifest(dir);
  auto e = field_entry(field);
  write_f32(dir / e.array.file, field.values.data(), static_cast<std::size_t>(field.values.size()));
  std::erase_if(m.fields, [&](const FieldEntry& x) { return field_key(x) == field_key(e); });
  m.fields.push_back(std::move(e));
  std::sort(m.fields.begin(), m.fields.end(),
            [](const auto& a, const auto& b) { return field_key(a) < field_key(b); });
  write_manifest(dir, m);
}

void store_concept(const fs::path& dir, const std::string& name, const Concept& c) {
  if (!valid_concept_name(name)) throw ValidationError(fmt::format("invalid concept name '{}'", name));
  Manifest m = load_manifest(dir);
  if (c.labels.size() != m.n_rows) {
    throw ValidationError(fmt::format("concept length mismatch: '{}' has {} labels, expected {}",
                                      name, c.labels.size(), m.n_rows));
  }
  if (std::any_of(c.labels.begin(), c.labels.end(), [](auto v) { return v > 1; })) {
    throw ValidationError(fmt::format("concept '{}': labels must be 0 or 1", name));
  }
  ConceptEntry e{name, c.title.empty() ? name : c.title,
                 {"concept_" + name + ".u8", c.labels.size()}, positive_rate(c.labels),
                 c.provenance};
  write_bytes(dir / e.array.file, reinterpret_cast<const char*>(c.labels.data()), c.labels.size());
  std::erase_if(m.concepts, [&](const ConceptEntry& x) { return x.name == name; });
  m.concepts.push_back(std::move(e));
  std::sort(m.concepts.begin(), m.concepts.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  write_manifest(dir, m);
}

}  // namespace latentprobe
