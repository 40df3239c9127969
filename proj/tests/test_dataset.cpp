#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "doctest.h"

#include "latentprobe/dataset.hpp"
#include "latentprobe/error.hpp"
#include "support/synthetic.hpp"

using namespace latentprobe;
using latentprobe::testing::TempDir;

namespace {

ProbeDataset tiny(std::size_t n_times = 1, std::size_t dim = 2) {
  ProbeDataset ds;
  ds.grid = GridSpec{1, 1, 0.0, 0.0, 0.25, 1};
  for (std::size_t t = 0; t < n_times; ++t) {
    ds.timestamps.push_back(parse_utc("2024-07-13T12:00:00Z") + std::chrono::hours(6 * t));
  }
  ds.embeddings = FloatMatrix::Constant(static_cast<Eigen::Index>(n_times),
                                        static_cast<Eigen::Index>(dim), 1.5f);
  ds.concepts["land_sea"] = Concept{"Land-Sea Distinction", LabelVector(n_times, 1), {}};
  return ds;
}

void expect_same(const ProbeDataset& a, const ProbeDataset& b) {
  REQUIRE(a.embeddings.rows() == b.embeddings.rows());
  REQUIRE(a.embeddings.cols() == b.embeddings.cols());
  CHECK(std::memcmp(a.embeddings.data(), b.embeddings.data(),
                    static_cast<std::size_t>(a.embeddings.size()) * sizeof(float)) == 0);
  CHECK(a.grid == b.grid);
  CHECK(a.timestamps == b.timestamps);
  CHECK(a.concepts == b.concepts);
  CHECK(a.metadata == b.metadata);
  REQUIRE(a.fields.size() == b.fields.size());
}

}  // namespace

TEST_CASE("utc timestamps parse and format") {
  const auto t = parse_utc("2024-07-13T12:00Z");
  CHECK(format_utc(t) == "2024-07-13T12:00:00Z");
  CHECK(parse_utc("2024-07-16T00:00:00Z") - t == std::chrono::hours(60));
  CHECK_THROWS_AS(parse_utc("2024-13-01T00:00Z"), ValidationError);
  CHECK_THROWS_AS(parse_utc("yesterday"), ValidationError);
}

TEST_CASE("row index is a lexicographic bijection") {
  const GridSpec g{3, 4, 0.0, 0.0, 1.0, 3};
  const RowIndex idx(2, g);
  REQUIRE(idx.rows() == 2 * 3 * 3 * 4);
  std::set<RowCoord> seen;
  RowCoord prev{};
  for (std::size_t r = 0; r < idx.rows(); ++r) {
    const auto c = idx.coord(r);
    CHECK(idx.row(c) == r);
    if (r > 0) CHECK(prev < c);
    seen.insert(c);
    prev = c;
  }
  CHECK(seen.size() == idx.rows());
  CHECK(idx.coord(idx.rows() - 1) == RowCoord{1, 2, 2, 3});
}

TEST_CASE("save writes arrays of the documented sizes") {
  TempDir dir;
  const auto m = save_dataset(tiny(), dir.path());
  CHECK(std::filesystem::file_size(dir / "embeddings.f32") == 8);
  CHECK(std::filesystem::file_size(dir / "concept_land_sea.u8") == 1);
  CHECK(m.embeddings.bytes == 8);
  REQUIRE(m.concepts.size() == 1);
  CHECK(m.concepts[0].positive_rate == 1.0);
  CHECK(m.concepts[0].title == "Land-Sea Distinction");
}

TEST_CASE("embeddings are little-endian binary32, row-major") {
  TempDir dir;
  auto ds = tiny(1, 2);
  ds.embeddings(0, 0) = 1.0f;
  ds.embeddings(0, 1) = -2.0f;
  save_dataset(ds, dir.path());
  const auto bytes = latentprobe::testing::slurp(dir / "embeddings.f32");
  const unsigned char expected[8] = {0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  REQUIRE(bytes.size() == 8);
  CHECK(std::memcmp(bytes.data(), expected, 8) == 0);
}

TEST_CASE("concept label vector of wrong length is rejected") {
  TempDir dir;
  auto ds = tiny(2);
  ds.concepts["land_sea"].labels.pop_back();
  try {
    save_dataset(ds, dir.path());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("concept length mismatch") != std::string::npos);
  }
}

TEST_CASE("round trip is bit-exact on a full scene") {
  TempDir dir;
  auto ds = latentprobe::testing::make_scene();
  ds.embeddings(0, 0) = std::numeric_limits<float>::denorm_min();
  ds.embeddings(1, 1) = -0.0f;
  ds.concepts["edge"] = Concept{"Edge, with comma", LabelVector(ds.rows(), 0), {{"note", "x"}}};
  ds.concepts["edge"].labels[3] = 1;
  save_dataset(ds, dir.path());
  const auto back = load_dataset(dir.path());
  expect_same(ds, back);
  for (std::size_t i = 0; i < ds.fields.size(); ++i) {
    const auto& f = ds.fields[i];
    const FieldGrid* g = back.find_field(f.variable, f.level_hpa, f.time);
    REQUIRE(g != nullptr);
    CHECK(g->units == f.units);
    CHECK(g->values.isApprox(f.values.cast<float>().cast<double>(), 0.0));
  }
  // Saving what was loaded reproduces the directory byte for byte.
  TempDir again;
  save_dataset(back, again.path());
  CHECK(latentprobe::testing::snapshot(dir.path()) == latentprobe::testing::snapshot(again.path()));
}

TEST_CASE("load rejects damaged directories") {
  TempDir dir;
  save_dataset(tiny(2, 3), dir.path());

  SUBCASE("truncated embeddings") {
    std::filesystem::resize_file(dir / "embeddings.f32", 20);
    try {
      load_dataset(dir.path());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("expected 2x3x4 = 24 bytes") != std::string::npos);
    }
  }
  SUBCASE("unsupported version") {
    auto text = latentprobe::testing::slurp(dir / "manifest.json");
    text.replace(text.find("\"format_version\": 1"), 19, "\"format_version\": 999");
    std::ofstream(dir / "manifest.json", std::ios::trunc) << text;
    try {
      load_dataset(dir.path());
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("unsupported format_version 999") != std::string::npos);
    }
  }
  SUBCASE("missing label file") {
    std::filesystem::remove(dir / "concept_land_sea.u8");
    CHECK_THROWS_AS(load_dataset(dir.path()), IoError);
  }
  SUBCASE("missing manifest") {
    std::filesystem::remove(dir / "manifest.json");
    CHECK_THROWS_AS(load_dataset(dir.path()), IoError);
  }
  SUBCASE("non-finite embedding") {
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::fstream f(dir / "embeddings.f32", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    f.write(reinterpret_cast<const char*>(&nan), 4);
    f.close();
    CHECK_THROWS_AS(load_dataset(dir.path()), ValidationError);
  }
  SUBCASE("label byte outside {0,1}") {
    std::ofstream(dir / "concept_land_sea.u8", std::ios::binary | std::ios::trunc) << '\x02' << '\x00';
    CHECK_THROWS_AS(load_dataset(dir.path()), ValidationError);
  }
  SUBCASE("array path escaping the directory") {
    auto text = latentprobe::testing::slurp(dir / "manifest.json");
    text.replace(text.find("\"embeddings.f32\""), 16, "\"../embeddings.f32\"");
    std::ofstream(dir / "manifest.json", std::ios::trunc) << text;
    CHECK_THROWS_AS(load_dataset(dir.path()), ValidationError);
  }
}

TEST_CASE("dataset invariants") {
  auto ds = tiny(2);
  CHECK_NOTHROW(ds.validate());

  SUBCASE("row count must match grid") {
    ds.timestamps.pop_back();
    CHECK_THROWS_AS(ds.validate(), ValidationError);
  }
  SUBCASE("levels are 1 or 3") {
    ds.grid.n_levels = 2;
    CHECK_THROWS_AS(ds.validate(), ValidationError);
  }
  SUBCASE("non-finite embedding") {
    ds.embeddings(1, 0) = std::numeric_limits<float>::infinity();
    CHECK_THROWS_AS(ds.validate(), ValidationError);
  }
  SUBCASE("unknown concept lists what is available") {
    try {
      (void)ds.concept_named("heat");
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("available: land_sea") != std::string::npos);
    }
  }
}

TEST_CASE("store_concept and store_field update an existing directory") {
  TempDir dir;
  save_dataset(tiny(3), dir.path());
  store_concept(dir.path(), "heat", Concept{"Heat", {0, 1, 1}, {}});
  FieldGrid f{"kindex", Units::k_index, std::nullopt, parse_utc("2024-07-13T12:00Z"), Matrix::Ones(2, 2)};
  store_field(dir.path(), f);
  store_field(dir.path(), f);  // replacing is idempotent

  const auto ds = load_dataset(dir.path());
  CHECK(ds.concepts.at("heat").labels == LabelVector{0, 1, 1});
  CHECK(ds.fields.size() == 1);
  CHECK(std::filesystem::file_size(dir / "field_kindex_sfc_20240713T120000.f32") == 2 * 2 * 4);
  CHECK_THROWS_AS(store_concept(dir.path(), "short", Concept{"", {0, 1}, {}}), ValidationError);
  CHECK_THROWS_AS(store_concept(dir.path(), "bad/name", Concept{"", {0, 1, 0}, {}}), ValidationError);
}

TEST_CASE("row selection by latent level") {
  latentprobe::testing::SceneOptions o;
  o.n_times = 2;
  const auto ds = latentprobe::testing::make_scene(o);
  const auto rows = ds.select_rows(1);
  CHECK(rows.size() == ds.rows() / 3);
  for (auto r : rows) CHECK(ds.row_index().coord(r).level == 1);
  CHECK(ds.select_rows().size() == ds.rows());
  CHECK_THROWS_AS(ds.select_rows(3), ValidationError);
}
