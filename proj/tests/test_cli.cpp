#include <cstdlib>
#include <sstream>

#include "doctest.h"

#include "latentprobe/cli.hpp"
#include "latentprobe/dataset.hpp"
#include "latentprobe/meteo.hpp"
#include "latentprobe/report.hpp"
#include "support/synthetic.hpp"

using namespace latentprobe;
using latentprobe::testing::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "latentprobe");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\n') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string second_line(const std::string& text) {
  const auto a = text.find('\n');
  return text.substr(a + 1, text.find('\n', a + 1) - a - 1);
}

/// A saved scene with derived fields and the four standard concepts.
void prepare(const std::filesystem::path& dir) {
  save_dataset(latentprobe::testing::make_scene(), dir);
  const std::string d = dir.string();
  REQUIRE(call({"derive", "--dataset", d}).code == 0);
  REQUIRE(call({"mask", "--dataset", d, "--name", "land_sea", "--title", "Land-Sea Distinction", "--field",
                "lsm", "--threshold", "0.5"}).code == 0);
  REQUIRE(call({"mask", "--dataset", d, "--name", "heat_p75", "--title", "Heat, 75th percentile", "--field",
                "t2m", "--percentile", "75"}).code == 0);
  REQUIRE(call({"mask", "--dataset", d, "--name", "kindex_20", "--kindex-preset", "20"}).code == 0);
}

}  // namespace

TEST_CASE("derive writes dew point and K-index grids") {
  TempDir dir;
  const auto scene = latentprobe::testing::make_scene();
  save_dataset(scene, dir.path());
  const auto r = call({"derive", "--dataset", dir.path().string()});
  REQUIRE(r.code == 0);

  const auto ds = load_dataset(dir.path());
  const auto t = ds.timestamps[1];
  const FieldGrid* kx = ds.find_field("kindex", std::nullopt, t);
  REQUIRE(kx != nullptr);
  // Inputs as stored (float32), evaluated in double, stored as float32.
  const auto expected = k_index_field(to_celsius(*ds.find_field("t", 850, t)), to_celsius(*ds.find_field("t", 700, t)),
                                      to_celsius(*ds.find_field("t", 500, t)), *ds.find_field("rh", 850, t),
                                      *ds.find_field("rh", 700, t));
  CHECK(kx->values.isApprox(expected.values.cast<float>().cast<double>(), 0.0));
  CHECK(ds.find_field("td", 850, t) != nullptr);
  CHECK(ds.find_field("td", 700, t) != nullptr);

  const auto fine = scene.find_field("t", 850, t)->values;
  const auto bytes = static_cast<std::uintmax_t>(fine.rows() * fine.cols() * 4);
  CHECK(std::filesystem::file_size(dir / "field_kindex_sfc_20240713T180000.f32") == bytes);
}

TEST_CASE("derive on 1x1 grids reproduces the scalar K-index") {
  TempDir dir;
  ProbeDataset ds;
  ds.grid = GridSpec{1, 1, 0.0, 0.0, 0.25, 1};
  const auto t = parse_utc("2024-07-13T12:00Z");
  ds.timestamps = {t};
  ds.embeddings = FloatMatrix::Zero(1, 2);
  const auto one = [&](std::string var, Units u, int level, double v) {
    return FieldGrid{std::move(var), u, level, t, Matrix::Constant(1, 1, v)};
  };
  ds.fields = {one("t", Units::celsius, 850, 15.0), one("t", Units::celsius, 700, 0.0),
               one("t", Units::celsius, 500, -20.0), one("rh", Units::percent, 850, 100.0),
               one("rh", Units::percent, 700, 100.0)};
  save_dataset(ds, dir.path());
  REQUIRE(call({"derive", "--dataset", dir.path().string()}).code == 0);
  CHECK(load_dataset(dir.path()).find_field("kindex", std::nullopt, t)->values(0, 0) == 50.0);
}

TEST_CASE("derive names the missing level") {
  TempDir dir;
  auto scene = latentprobe::testing::make_scene();
  std::erase_if(scene.fields, [](const FieldGrid& f) { return f.variable == "t" && f.level_hpa == 700; });
  save_dataset(scene, dir.path());
  const auto r = call({"derive", "--dataset", dir.path().string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("'t' at 700 hPa") != std::string::npos);
}

TEST_CASE("masks follow their definitions") {
  TempDir dir;
  prepare(dir.path());
  const auto ds = load_dataset(dir.path());
  const auto idx = ds.row_index();

  // Land-sea: majority of each 2x2 block of the fine mask, same at every level and time.
  const FieldGrid* lsm = ds.find_field("lsm", std::nullopt, std::nullopt);
  REQUIRE(lsm != nullptr);
  const auto& ls = ds.concepts.at("land_sea");
  CHECK(ls.title == "Land-Sea Distinction");
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto c = idx.coord(r);
    const auto block = lsm->values.block(2 * static_cast<Eigen::Index>(c.lat), 2 * static_cast<Eigen::Index>(c.lon), 2, 2);
    const int count = static_cast<int>((block.array() > 0.5).count());
    CHECK(ls.labels[r] == (count >= 2 ? 1 : 0));
  }

  // Percentile threshold is pooled across all times of the reference field.
  std::vector<double> pooled;
  for (const auto& f : ds.fields) {
    if (f.variable != "t2m") continue;
    const auto c = to_celsius(f);
    pooled.insert(pooled.end(), c.values.data(), c.values.data() + c.values.size());
  }
  const auto& heat = ds.concepts.at("heat_p75");
  CHECK(heat.provenance.at("threshold").get<double>() == percentile_threshold(pooled, 75));
  CHECK(heat.provenance.at("percentile").get<double>() == 75.0);

  const auto& k20 = ds.concepts.at("kindex_20");
  CHECK(k20.provenance.at("threshold").get<double>() == 20.0);
}

TEST_CASE("mask argument errors") {
  TempDir dir;
  save_dataset(latentprobe::testing::make_scene(), dir.path());
  const std::string d = dir.path().string();
  CHECK(call({"mask", "--dataset", d, "--name", "x", "--field", "lsm"}).code == 1);
  CHECK(call({"mask", "--dataset", d, "--name", "x", "--field", "lsm", "--threshold", "0.5", "--percentile", "90"}).code == 1);
  CHECK(call({"mask", "--dataset", d, "--name", "x", "--field", "lsm", "--threshold", "0.5", "--factor", "3"}).code == 1);
  CHECK(call({"mask", "--dataset", d, "--name", "x", "--kindex-preset", "30"}).code == 1);
  CHECK(call({"mask", "--dataset", d, "--name", "x", "--field", "nope", "--threshold", "1"}).code == 1);
}

TEST_CASE("probe, concept and report pipeline") {
  TempDir dir;
  prepare(dir.path());
  const std::string d = dir.path().string();
  const std::string probes = (dir / "probes").string();

  const auto p = call({"probe", "--dataset", d, "--concept", "land_sea", "--out", probes});
  REQUIRE(p.code == 0);
  const auto cells = split_csv_line(p.out.substr(0, p.out.find('\n')));
  REQUIRE(cells.size() == 8);
  CHECK(cells[0] == "Land-Sea Distinction");
  CHECK(std::strtod(cells[1].c_str(), nullptr) >= 90.0);
  CHECK(std::filesystem::exists(dir / "probes" / "probe_land_sea.json"));
  CHECK(std::filesystem::exists(dir / "probes" / "table1_land_sea.csv"));

  REQUIRE(call({"probe", "--dataset", d, "--concept", "heat_p75", "--out", probes}).code == 0);
  REQUIRE(call({"probe", "--dataset", d, "--concept", "kindex_20", "--out", probes, "--level", "1"}).code == 0);

  const auto c = call({"concept", "--dataset", d, "--probe", (dir / "probes" / "probe_land_sea.json").string(),
                       "--out", (dir / "t2.csv").string(), "--scores", (dir / "scores.csv").string()});
  REQUIRE(c.code == 0);
  const auto t2 = split_csv_line(second_line(read_text_file(dir / "t2.csv")));
  REQUIRE(t2.size() == 8);
  const double m0 = std::strtod(t2[2].c_str(), nullptr);
  const double m1 = std::strtod(t2[3].c_str(), nullptr);
  CHECK(std::strtod(t2[4].c_str(), nullptr) == m1 - m0);
  CHECK(m1 > m0);
  CHECK(t2[5] == "100.00");

  const std::string out = (dir / "report").string();
  const auto r = call({"report", "--dataset", d, "--probes", probes, "--out", out});
  REQUIRE(r.code == 0);
  const auto table1 = read_text_file(dir / "report" / "table1.csv");
  const auto table2 = read_text_file(dir / "report" / "table2.csv");
  CHECK(std::count(table1.begin(), table1.end(), '\n') == 4);
  CHECK(std::count(table2.begin(), table2.end(), '\n') == 4);
  CHECK(table1.find("\"Heat, 75th percentile\"") != std::string::npos);
  const auto proj = read_text_file(dir / "report" / "pca_projection.csv");
  CHECK(proj.starts_with("pc1,pc2,concept,bin\n"));
  CHECK(std::filesystem::exists(dir / "report" / "pca_model.json"));

  // Rerunning every command reproduces every file byte for byte.
  const auto before = latentprobe::testing::snapshot(dir.path());
  REQUIRE(call({"probe", "--dataset", d, "--concept", "land_sea", "--out", probes}).code == 0);
  REQUIRE(call({"concept", "--dataset", d, "--probe", (dir / "probes" / "probe_land_sea.json").string(),
                "--out", (dir / "t2.csv").string(), "--scores", (dir / "scores.csv").string()}).code == 0);
  REQUIRE(call({"report", "--dataset", d, "--probes", probes, "--out", out}).code == 0);
  CHECK(latentprobe::testing::snapshot(dir.path()) == before);
}

TEST_CASE("pca groups bin by positive members") {
  TempDir dir;
  prepare(dir.path());
  const std::string d = dir.path().string();
  const auto r = call({"pca", "--dataset", d, "--out", (dir / "pca").string(), "--group",
                       "Warm=heat_p75,kindex_20", "--concept", "land_sea"});
  REQUIRE(r.code == 0);
  const auto text = read_text_file(dir / "pca" / "pca_projection.csv");
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  std::size_t warm = 0, land = 0;
  while (std::getline(lines, line)) {
    const auto cells = split_csv_line(line);
    REQUIRE(cells.size() == 4);
    const int bin = std::atoi(cells[3].c_str());
    if (cells[2] == "Warm") {
      ++warm;
      CHECK(bin >= 0);
      CHECK(bin <= 2);
    } else {
      CHECK(cells[2] == "Land-Sea Distinction");
      ++land;
      CHECK((bin == 0 || bin == 1));
    }
  }
  const auto ds = load_dataset(dir.path());
  CHECK(warm == ds.rows());
  CHECK(land == ds.rows());
}

TEST_CASE("cli errors map to exit codes") {
  TempDir dir;
  prepare(dir.path());
  const std::string d = dir.path().string();

  const auto unknown = call({"probe", "--dataset", d, "--concept", "heat_p99", "--out", (dir / "p").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("available: heat_p75, kindex_20, land_sea") != std::string::npos);

  std::filesystem::create_directories(dir / "empty");
  CHECK(call({"report", "--dataset", d, "--probes", (dir / "empty").string(), "--out", (dir / "r").string()}).code == 1);
  CHECK(call({"report", "--dataset", d, "--probes", (dir / "absent").string(), "--out", (dir / "r").string()}).code == 2);
  CHECK(call({"derive", "--dataset", (dir / "absent").string()}).code == 2);
  CHECK(call({"concept", "--dataset", d, "--probe", (dir / "absent.json").string(), "--out", (dir / "x.csv").string()}).code == 2);
  CHECK(call({"probe", "--dataset", d, "--concept", "land_sea", "--out", (dir / "p").string(), "--test-fraction", "1.5"}).code == 1);
  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("config file supplies defaults, flags win") {
  TempDir dir;
  prepare(dir.path());
  const std::string d = dir.path().string();
  write_text_file(dir / "run.toml", "seed = 5\n");

  REQUIRE(call({"--config", (dir / "run.toml").string(), "probe", "--dataset", d, "--concept", "land_sea", "--out",
                (dir / "a").string()}).code == 0);
  REQUIRE(call({"--config", (dir / "run.toml").string(), "--seed", "9", "probe", "--dataset", d, "--concept",
                "land_sea", "--out", (dir / "b").string()}).code == 0);
  const auto a = nlohmann::json::parse(read_text_file(dir / "a" / "probe_land_sea.json"));
  const auto b = nlohmann::json::parse(read_text_file(dir / "b" / "probe_land_sea.json"));
  CHECK(a["evaluation"]["split_seed"] == 5);
  CHECK(b["evaluation"]["split_seed"] == 9);
}
