#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentprobe/field.hpp"
#include "latentprobe/matrix.hpp"
#include "latentprobe/time.hpp"

namespace latentprobe {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

/// Latent grid geometry. `n_levels` is 1 for surface embeddings and 3 for
/// atmospheric embeddings.
struct GridSpec {
  std::size_t n_lat = 1;
  std::size_t n_lon = 1;
  double lat_start = 0.0;
  double lon_start = 0.0;
  double resolution = 0.25;
  std::size_t n_levels = 1;

  std::size_t cells() const { return n_lat * n_lon; }
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct RowCoord {
  std::size_t time = 0;
  std::size_t level = 0;
  std::size_t lat = 0;
  std::size_t lon = 0;

  friend auto operator<=>(const RowCoord&, const RowCoord&) = default;
};

/// Maps embedding rows to (time, level, lat, lon) in lexicographic order:
/// time-major, then level, then lat, then lon.
class RowIndex {
 public:
  RowIndex(std::size_t n_times, const GridSpec& grid)
      : n_times_(n_times), n_levels_(grid.n_levels), n_lat_(grid.n_lat), n_lon_(grid.n_lon) {}

  std::size_t rows() const { return n_times_ * n_levels_ * n_lat_ * n_lon_; }
  RowCoord coord(std::size_t row) const;
  std::size_t row(const RowCoord& c) const;

 private:
  std::size_t n_times_, n_levels_, n_lat_, n_lon_;
};

/// A named binary concept. `title` is the display name used in reports.
struct Concept {
  std::string title;
  LabelVector labels;
  nlohmann::json provenance = nlohmann::json::object();

  friend bool operator==(const Concept&, const Concept&) = default;
};

/// Embeddings, grid metadata, concept labels and the source fields they were
/// derived from. Immutable once loaded.
struct ProbeDataset {
  FloatMatrix embeddings;
  GridSpec grid;
  std::vector<UtcInstant> timestamps;
  std::map<std::string, Concept> concepts;
  std::vector<FieldGrid> fields;
  nlohmann::json metadata = nlohmann::json::object();

  std::size_t rows() const { return static_cast<std::size_t>(embeddings.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(embeddings.cols()); }
  RowIndex row_index() const { return RowIndex(timestamps.size(), grid); }

  /// Throws ValidationError naming the offending field.
  void validate() const;

  const Concept& concept_named(const std::string& name) const;
  /// Row ids, optionally restricted to one latent level.
  std::vector<std::size_t> select_rows(std::optional<std::size_t> level = std::nullopt) const;
  /// Matching field or nullptr. Static fields match any time.
  const FieldGrid* find_field(const std::string& variable, std::optional<int> level_hpa,
                              std::optional<UtcInstant> time) const;
};

struct ArrayEntry {
  std::string file;
  std::uint64_t bytes = 0;
};

struct ConceptEntry {
  std::string name;
  std::string title;
  ArrayEntry array;
  double positive_rate = 0.0;
  nlohmann::json provenance = nlohmann::json::object();
};

struct FieldEntry {
  std::string variable;
  std::string units;
  std::optional<int> level_hpa;
  std::optional<std::string> time;
  std::size_t n_lat = 0;
  std::size_t n_lon = 0;
  ArrayEntry array;
};

struct Manifest {
  int format_version = kFormatVersion;
  std::string dtype = "float32-le";
  std::size_t n_rows = 0;
  std::size_t dim = 0;
  GridSpec grid;
  std::vector<std::string> timestamps;
  ArrayEntry embeddings;
  std::vector<ConceptEntry> concepts;
  std::vector<FieldEntry> fields;
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

/// Writes manifest.json plus raw little-endian arrays into `dir`.
Manifest save_dataset(const ProbeDataset& ds, const std::filesystem::path& dir);
ProbeDataset load_dataset(const std::filesystem::path& dir);
Manifest load_manifest(const std::filesystem::path& dir);

/// Adds or replaces one field in an existing dataset directory.
void store_field(const std::filesystem::path& dir, const FieldGrid& field);
/// Adds or replaces one concept in an existing dataset directory.
void store_concept(const std::filesystem::path& dir, const std::string& name, const Concept& c);

bool valid_concept_name(const std::string& name);

}  // namespace latentprobe
