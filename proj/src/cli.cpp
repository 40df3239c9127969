#include "latentprobe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "latentprobe/concept.hpp"
#include "latentprobe/dataset.hpp"
#include "latentprobe/error.hpp"
#include "latentprobe/meteo.hpp"
#include "latentprobe/pca.hpp"
#include "latentprobe/probe.hpp"
#include "latentprobe/random.hpp"
#include "latentprobe/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace latentprobe::cli {

namespace {

struct CommonArgs {
  std::uint64_t seed = 42;
};

struct DeriveArgs {
  std::string dataset;
  std::string temperature_var = "t";
  std::string humidity_var = "rh";
};

struct MaskArgs {
  std::string dataset;
  std::string name;
  std::string title;
  std::string field;
  std::optional<int> level_hpa;
  std::optional<double> threshold;
  std::optional<double> percentile;
  std::optional<int> kindex_preset;
  std::string reference;
  std::optional<std::size_t> factor;  // inferred from the grid shapes when absent
};

struct ProbeArgs {
  std::string dataset;
  std::string concept_name;
  std::string out;
  std::optional<std::size_t> level;
  double test_fraction = 0.2;
  ProbeConfig config;
  bool no_standardize = false;
  std::string class_weighting = "none";
};

struct ConceptArgs {
  std::string dataset;
  std::string probe;
  std::string out;
  std::string scores;
  bool held_out_only = false;
};

struct PcaArgs {
  std::string dataset;
  std::string out;
  std::size_t k = 2;
  std::optional<std::size_t> level;
  std::vector<std::string> concepts;
  std::vector<std::string> groups;
  std::size_t max_points = 0;
};

struct ReportArgs {
  std::string dataset;
  std::string probes;
  std::string out;
  bool held_out_only = false;
  std::size_t k = 2;
  std::optional<std::size_t> level;
  std::size_t max_points = 0;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

Matrix rows_as_double(const ProbeDataset& ds, std::span<const std::size_t> rows) {
  return take_rows(ds.embeddings, rows).cast<double>();
}

// ---------------------------------------------------------------- derive

void cmd_derive(const DeriveArgs& a, std::ostream& out) {
  const fs::path dir = a.dataset;
  const ProbeDataset ds = load_dataset(dir);

  for (auto t : ds.timestamps) {
    const auto require = [&](const std::string& var, int level) {
      const FieldGrid* f = ds.find_field(var, level, t);
      if (!f) {
        throw ValidationError(fmt::format("missing field '{}' at {} hPa for {} (derive needs 850, "
                                          "700 and 500 hPa temperature, 850 and 700 hPa humidity)",
                                          var, level, format_utc(t)));
      }
      FieldGrid g = to_celsius(*f);
      g.time = t;
      return g;
    };
    const FieldGrid t850 = require(a.temperature_var, 850);
    const FieldGrid t700 = require(a.temperature_var, 700);
    const FieldGrid t500 = require(a.temperature_var, 500);
    const FieldGrid rh850 = require(a.humidity_var, 850);
    const FieldGrid rh700 = require(a.humidity_var, 700);

    store_field(dir, dew_point_field(t850, rh850));
    store_field(dir, dew_point_field(t700, rh700));
    store_field(dir, k_index_field(t850, t700, t500, rh850, rh700));
    out << "derived td@850, td@700, kindex for " << format_utc(t) << "\n";
  }
}

// ---------------------------------------------------------------- mask

std::pair<std::string, std::optional<int>> parse_field_ref(const std::string& ref) {
  const auto at = ref.find('@');
  if (at == std::string::npos) return {ref, std::nullopt};
  const std::string level = ref.substr(at + 1);
  if (level == "surface" || level == "sfc") return {ref.substr(0, at), std::nullopt};
  try {
    return {ref.substr(0, at), std::stoi(level)};
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("bad field reference '{}' (expected VAR or VAR@LEVEL)", ref));
  }
}

// Integer ratio of field cells to latent cells, identical along both axes.
std::size_t pooling_factor(const FieldGrid& f, const GridSpec& grid) {
  const auto rows = static_cast<std::size_t>(f.n_lat());
  const auto cols = static_cast<std::size_t>(f.n_lon());
  if (rows % grid.n_lat != 0 || cols % grid.n_lon != 0 || rows / grid.n_lat != cols / grid.n_lon) {
    throw ValidationError(fmt::format("{} is {}x{}, not an integer refinement of the {}x{} latent grid; pass --factor",
                                      describe(f), rows, cols, grid.n_lat, grid.n_lon));
  }
  return rows / grid.n_lat;
}

void cmd_mask(MaskArgs a, std::ostream& out) {
  const fs::path dir = a.dataset;
  const ProbeDataset ds = load_dataset(dir);
  if (!valid_concept_name(a.name)) throw ValidationError(fmt::format("invalid concept name '{}'", a.name));

  if (a.kindex_preset) {
    if (a.field.empty()) a.field = "kindex";
    a.threshold = *a.kindex_preset == 20 ? kKIndexLowCutoff : kKIndexHighCutoff;
  }
  if (a.field.empty()) throw ValidationError("mask: --field is required");
  if (a.threshold.has_value() == a.percentile.has_value()) {
    throw ValidationError("mask: give exactly one of --threshold, --percentile, --kindex-preset");
  }

  MaskProvenance base;
  double threshold = 0.0;
  if (a.percentile) {
    const auto [ref_var, ref_level] =
        a.reference.empty() ? std::pair{a.field, a.level_hpa} : parse_field_ref(a.reference);
    std::vector<double> samples;
    for (const auto& f : ds.fields) {
      if (f.variable != ref_var || f.level_hpa != ref_level) continue;
      const FieldGrid c = to_celsius(f);
      samples.insert(samples.end(), c.values.data(), c.values.data() + c.values.size());
    }
    if (samples.empty()) {
      throw ValidationError(fmt::format("no reference samples for '{}'",
                                        a.reference.empty() ? a.field : a.reference));
    }
    threshold = percentile_threshold(samples, *a.percentile);
    base.percentile = a.percentile;
    base.reference = fmt::format("{}@{} ({} samples)", ref_var,
                                 ref_level ? std::to_string(*ref_level) : "surface", samples.size());
  } else {
    threshold = *a.threshold;
  }

  const auto idx = ds.row_index();
  LabelVector labels(ds.rows(), 0);
  MaskProvenance prov;
  for (std::size_t ti = 0; ti < ds.timestamps.size(); ++ti) {
    const FieldGrid* f = ds.find_field(a.field, a.level_hpa, ds.timestamps[ti]);
    if (!f) {
      throw ValidationError(fmt::format("missing field '{}@{}' for {}", a.field,
                                        a.level_hpa ? std::to_string(*a.level_hpa) : "surface",
                                        format_utc(ds.timestamps[ti])));
    }
    const std::size_t factor = a.factor.value_or(pooling_factor(*f, ds.grid));
    const ConceptMask coarse = regrid_mask(threshold_mask(to_celsius(*f), threshold), factor);
    if (static_cast<std::size_t>(coarse.values.rows()) != ds.grid.n_lat ||
        static_cast<std::size_t>(coarse.values.cols()) != ds.grid.n_lon) {
      throw ValidationError(fmt::format("mask of {} is {}x{} after regridding by {}, latent grid is {}x{}",
                                        describe(*f), coarse.values.rows(), coarse.values.cols(),
                                        factor, ds.grid.n_lat, ds.grid.n_lon));
    }
    prov = coarse.provenance;
    for (std::size_t l = 0; l < ds.grid.n_levels; ++l) {
      for (std::size_t i = 0; i < ds.grid.n_lat; ++i) {
        for (std::size_t j = 0; j < ds.grid.n_lon; ++j) {
          labels[idx.row({ti, l, i, j})] =
              coarse.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
      }
    }
  }
  prov.source = a.field + "@" + (a.level_hpa ? std::to_string(*a.level_hpa) : "surface");
  prov.percentile = base.percentile;
  prov.reference = base.reference;
  prov.threshold = threshold;

  json provenance = prov.to_json();
  provenance["latent_levels"] = "broadcast";
  Concept c{a.title.empty() ? a.name : a.title, std::move(labels), provenance};
  store_concept(dir, a.name, c);
  const auto pos = std::count(c.labels.begin(), c.labels.end(), std::uint8_t{1});
  out << fmt::format("concept {}: threshold {} -> {} of {} rows positive\n", a.name, threshold, pos,
                     c.labels.size());
}

// ---------------------------------------------------------------- probe

void cmd_probe(ProbeArgs a, const CommonArgs& common, std::ostream& out) {
  const ProbeDataset ds = load_dataset(a.dataset);
  const Concept& concept_data = ds.concept_named(a.concept_name);

  a.config.seed = common.seed;
  a.config.standardize = !a.no_standardize;
  a.config.class_weighting =
      a.class_weighting == "balanced" ? ClassWeighting::balanced : ClassWeighting::none;
  a.config.validate();

  const auto rows = ds.select_rows(a.level);
  const Matrix x = rows_as_double(ds, rows);
  const LabelVector y = take_labels(concept_data.labels, rows);

  const Split split = split_stratified(y, a.test_fraction, common.seed);
  LogisticProbe probe = train_probe(take_rows(x, split.train), take_labels(y, split.train), a.config);
  probe.concept_name = a.concept_name;

  const Matrix x_test = take_rows(x, split.test);
  const ClassificationMetrics metrics =
      classification_metrics(take_labels(y, split.test), classify(probe, x_test));
  const SplitInfo info{split.train.size(), split.test.size(), a.test_fraction, common.seed};

  json j = to_json(probe);
  j["title"] = concept_data.title;
  j["evaluation"] = {{"level", a.level ? json(*a.level) : json(nullptr)},
                     {"rows", rows.size()},
                     {"n_train", info.n_train},
                     {"n_test", info.n_test},
                     {"test_fraction", a.test_fraction},
                     {"split_seed", common.seed},
                     {"test_metrics", to_json(metrics)}};

  const fs::path out_dir = a.out;
  ensure_dir(out_dir);
  write_text_file(out_dir / ("probe_" + a.concept_name + ".json"), j.dump(2) + "\n");
  const std::string row = table1_row(concept_data.title, metrics, info);
  write_text_file(out_dir / ("table1_" + a.concept_name + ".csv"), table1_header() + row);
  out << row;
  if (!probe.converged) {
    out << fmt::format("warning: probe '{}' did not converge in {} iterations (gradient norm {})\n",
                       a.concept_name, probe.iterations, probe.gradient_norm);
  }
}

// ---------------------------------------------------------------- concept

struct LoadedProbe {
  LogisticProbe probe;
  json document;
};

LoadedProbe load_probe(const fs::path& path) {
  if (!fs::exists(path)) throw IoError(fmt::format("probe file '{}' not found", path.string()));
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return {probe_from_json(j), j};
}

std::optional<std::size_t> probe_level(const json& doc) {
  const auto& ev = doc.value("evaluation", json::object());
  if (!ev.contains("level") || ev["level"].is_null()) return std::nullopt;
  return ev["level"].get<std::size_t>();
}

struct ConceptResult {
  std::string title;
  ConceptReport report;
  Vector scores;
  Vector probs;
  LabelVector labels;
  std::vector<std::size_t> rows;
};

ConceptResult evaluate_concept(const ProbeDataset& ds, const LoadedProbe& lp, bool held_out_only) {
  const auto& name = lp.probe.concept_name;
  const Concept& concept_data = ds.concept_named(name);
  std::vector<std::size_t> rows = ds.select_rows(probe_level(lp.document));
  if (held_out_only) {
    const auto& ev = lp.document.at("evaluation");
    const LabelVector all = take_labels(concept_data.labels, rows);
    const Split split = split_stratified(all, ev.at("test_fraction").get<double>(),
                                         ev.at("split_seed").get<std::uint64_t>());
    std::vector<std::size_t> test_rows;
    for (auto i : split.test) test_rows.push_back(rows[i]);
    rows = std::move(test_rows);
  }
  ConceptResult r;
  r.title = lp.document.value("title", concept_data.title);
  const Matrix x = rows_as_double(ds, rows);
  r.labels = take_labels(concept_data.labels, rows);
  r.scores = concept_scores(lp.probe, x);
  r.probs = predict_proba(lp.probe, x);
  r.report = concept_report(as_span(r.scores), as_span(r.probs), r.labels);
  r.rows = std::move(rows);
  return r;
}

void cmd_concept(const ConceptArgs& a, std::ostream& out) {
  const ProbeDataset ds = load_dataset(a.dataset);
  const LoadedProbe lp = load_probe(a.probe);
  const ConceptResult r = evaluate_concept(ds, lp, a.held_out_only);

  const std::string row = table2_row(r.title, r.report);
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
  write_text_file(out_path, table2_header() + row);
  if (!a.scores.empty()) {
    std::string text = "row,score,probability,label\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      text += fmt::format("{},{},{},{}\n", r.rows[i], r.scores[k], r.probs[k], r.labels[i]);
    }
    write_text_file(a.scores, text);
  }
  out << row;
}

// ---------------------------------------------------------------- pca

struct BinGroup {
  std::string title;
  std::vector<std::string> members;
};

std::vector<BinGroup> parse_groups(const std::vector<std::string>& specs) {
  std::vector<BinGroup> groups;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
      throw ValidationError(fmt::format("bad --group '{}' (expected NAME=c1,c2,...)", s));
    }
    BinGroup g{s.substr(0, eq), {}};
    std::string rest = s.substr(eq + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const auto comma = rest.find(',', pos);
      const auto item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (!item.empty()) g.members.push_back(item);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<std::size_t> subsample(std::vector<std::size_t> rows, std::size_t max_points,
                                   std::uint64_t seed) {
  if (max_points == 0 || rows.size() <= max_points) return rows;
  Rng rng(seed);
  rng.shuffle(rows.begin(), rows.end());
  rows.resize(max_points);
  std::sort(rows.begin(), rows.end());
  return rows;
}

void write_pca(const ProbeDataset& ds, const fs::path& out_dir, std::size_t k,
               std::optional<std::size_t> level, std::vector<std::string> concept_names,
               const std::vector<BinGroup>& groups, std::size_t max_points, std::uint64_t seed) {
  if (k < 2) throw ValidationError("pca: k must be >= 2 for the pc1/pc2 projection");
  const auto rows = subsample(ds.select_rows(level), max_points, seed);
  const Matrix x = rows_as_double(ds, rows);
  const PcaModel model = fit_pca(x, k);
  const Matrix proj = project(model, x);

  std::sort(concept_names.begin(), concept_names.end());
  std::string csv = pca_header();
  for (const auto& name : concept_names) {
    const Concept& c = ds.concept_named(name);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      csv += pca_row(proj(r, 0), proj(r, 1), c.title, c.labels[rows[i]]);
    }
  }
  for (const auto& g : groups) {
    std::vector<const Concept*> members;
    for (const auto& m : g.members) members.push_back(&ds.concept_named(m));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      int bin = 0;
      for (const auto* c : members) bin += c->labels[rows[i]];
      const auto r = static_cast<Eigen::Index>(i);
      csv += pca_row(proj(r, 0), proj(r, 1), g.title, bin);
    }
  }

  json j = to_json(model);
  j["level"] = level ? json(*level) : json(nullptr);
  j["n_points"] = rows.size();
  j["max_points"] = max_points;
  j["seed"] = seed;
  j["fit_on"] = level ? "single latent level" : "all latent levels";

  ensure_dir(out_dir);
  write_text_file(out_dir / "pca_model.json", j.dump(2) + "\n");
  write_text_file(out_dir / "pca_projection.csv", csv);
}

void cmd_pca(const PcaArgs& a, const CommonArgs& common, std::ostream& out) {
  const ProbeDataset ds = load_dataset(a.dataset);
  std::vector<std::string> names = a.concepts;
  if (names.empty() && a.groups.empty()) {
    for (const auto& [n, _] : ds.concepts) names.push_back(n);
  }
  write_pca(ds, a.out, a.k, a.level, names, parse_groups(a.groups), a.max_points, common.seed);
  out << "wrote " << (fs::path(a.out) / "pca_projection.csv").string() << "\n";
}

// ---------------------------------------------------------------- report

void cmd_report(const ReportArgs& a, const CommonArgs& common, std::ostream& out) {
  const fs::path probe_dir = a.probes;
  if (!fs::is_directory(probe_dir)) {
    throw IoError(fmt::format("probe directory '{}' not found", probe_dir.string()));
  }
  std::map<std::string, LoadedProbe> probes;
  for (const auto& entry : fs::directory_iterator(probe_dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || !name.starts_with("probe_") || !name.ends_with(".json")) continue;
    LoadedProbe lp = load_probe(entry.path());
    const std::string key = lp.probe.concept_name;
    probes.emplace(key, std::move(lp));
  }
  if (probes.empty()) {
    throw ValidationError(fmt::format("no probe_*.json files in '{}'", probe_dir.string()));
  }

  const ProbeDataset ds = load_dataset(a.dataset);
  std::string table1 = table1_header();
  std::string table2 = table2_header();
  std::vector<std::string> names;
  for (const auto& [name, lp] : probes) {
    const ConceptResult r = evaluate_concept(ds, lp, a.held_out_only);
    table2 += table2_row(r.title, r.report);
    const auto& ev = lp.document.at("evaluation");
    const auto& tm = ev.at("test_metrics");
    ClassificationMetrics m;
    m.accuracy = tm.at("accuracy").get<double>();
    if (!tm.at("precision").is_null()) m.precision = tm.at("precision").get<double>();
    if (!tm.at("recall").is_null()) m.recall = tm.at("recall").get<double>();
    table1 += table1_row(r.title, m,
                         {ev.at("n_train").get<std::size_t>(), ev.at("n_test").get<std::size_t>(),
                          ev.at("test_fraction").get<double>(), ev.at("split_seed").get<std::uint64_t>()});
    names.push_back(name);
  }

  const fs::path out_dir = a.out;
  ensure_dir(out_dir);
  write_text_file(out_dir / "table1.csv", table1);
  write_text_file(out_dir / "table2.csv", table2);
  write_pca(ds, out_dir, a.k, a.level, names, {}, a.max_points, common.seed);
  out << table2;
}

// ---------------------------------------------------------------- wiring

template <typename T>
CLI::Option* add_optional(CLI::App* app, const std::string& flag, std::optional<T>& target,
                          const std::string& help) {
  return app->add_option_function<T>(flag, [&target](const T& v) { target = v; }, help);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Linear probing and concept-vector analysis of frozen encoder embeddings",
               args.empty() ? "latentprobe" : args.front()};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags win");

  CommonArgs common;
  app.add_option("--seed", common.seed, "Seed for every random choice")->capture_default_str();

  DeriveArgs derive;
  auto* derive_cmd = app.add_subcommand("derive", "Compute dew point and K-index fields");
  derive_cmd->fallthrough();
  derive_cmd->add_option("--dataset", derive.dataset, "Dataset directory")->required();
  derive_cmd->add_option("--temperature-var", derive.temperature_var, "Temperature variable name")
      ->capture_default_str();
  derive_cmd->add_option("--humidity-var", derive.humidity_var, "Relative humidity variable name")
      ->capture_default_str();

  MaskArgs mask;
  auto* mask_cmd = app.add_subcommand("mask", "Build a binary concept from a field");
  mask_cmd->fallthrough();
  mask_cmd->add_option("--dataset", mask.dataset, "Dataset directory")->required();
  mask_cmd->add_option("--name", mask.name, "Concept name")->required();
  mask_cmd->add_option("--title", mask.title, "Display name used in reports");
  mask_cmd->add_option("--field", mask.field, "Source field variable");
  add_optional(mask_cmd, "--level", mask.level_hpa, "Source field level in hPa (omit for surface)");
  auto* thr = add_optional(mask_cmd, "--threshold", mask.threshold, "Absolute threshold (value > thr)");
  auto* pct = add_optional(mask_cmd, "--percentile", mask.percentile, "Nearest-rank percentile threshold");
  auto* kpre = add_optional(mask_cmd, "--kindex-preset", mask.kindex_preset, "K-index cutoff preset")
                   ->check(CLI::IsMember({20, 35}));
  thr->excludes(pct)->excludes(kpre);
  pct->excludes(kpre);
  mask_cmd->add_option("--reference", mask.reference, "Percentile reference field VAR[@LEVEL]");
  add_optional(mask_cmd, "--factor", mask.factor, "Majority-pooling factor (default: field/latent shape ratio)")
      ->check(CLI::PositiveNumber);

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "Train a logistic probe and report test metrics");
  probe_cmd->fallthrough();
  probe_cmd->add_option("--dataset", probe.dataset, "Dataset directory")->required();
  probe_cmd->add_option("--concept", probe.concept_name, "Concept name")->required();
  probe_cmd->add_option("--out", probe.out, "Output directory")->required();
  add_optional(probe_cmd, "--level", probe.level, "Restrict to one latent level");
  probe_cmd->add_option("--test-fraction", probe.test_fraction, "Held-out fraction")->capture_default_str();
  probe_cmd->add_option("--l2", probe.config.l2_strength, "L2 strength")->capture_default_str();
  probe_cmd->add_option("--max-iters", probe.config.max_iters, "Iteration cap")->capture_default_str();
  probe_cmd->add_option("--tolerance", probe.config.tolerance, "Gradient-norm stop")->capture_default_str();
  probe_cmd->add_flag("--no-standardize", probe.no_standardize, "Train on raw features");
  probe_cmd->add_option("--class-weighting", probe.class_weighting, "none or balanced")
      ->capture_default_str()
      ->check(CLI::IsMember({"none", "balanced"}));

  ConceptArgs concept_args;
  auto* concept_cmd = app.add_subcommand("concept", "Concept-vector metrics for one probe");
  concept_cmd->fallthrough();
  concept_cmd->add_option("--dataset", concept_args.dataset, "Dataset directory")->required();
  concept_cmd->add_option("--probe", concept_args.probe, "Probe JSON file")->required();
  concept_cmd->add_option("--out", concept_args.out, "Output CSV")->required();
  concept_cmd->add_option("--scores", concept_args.scores, "Optional per-row scores CSV");
  concept_cmd->add_flag("--held-out-only", concept_args.held_out_only, "Use only the probe's test split");

  PcaArgs pca;
  auto* pca_cmd = app.add_subcommand("pca", "Fit PCA and write 2-D projections");
  pca_cmd->fallthrough();
  pca_cmd->add_option("--dataset", pca.dataset, "Dataset directory")->required();
  pca_cmd->add_option("--out", pca.out, "Output directory")->required();
  pca_cmd->add_option("--k", pca.k, "Number of components")->capture_default_str();
  add_optional(pca_cmd, "--level", pca.level, "Fit on one latent level only");
  pca_cmd->add_option("--concept", pca.concepts, "Concepts to colour by (default: all)");
  pca_cmd->add_option("--group", pca.groups, "Ordinal bins NAME=c1,c2,... (bin = positives among members)");
  pca_cmd->add_option("--max-points", pca.max_points, "Subsample size, 0 = all")->capture_default_str();

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Tables and PCA projection for all probes");
  report_cmd->fallthrough();
  report_cmd->add_option("--dataset", report.dataset, "Dataset directory")->required();
  report_cmd->add_option("--probes", report.probes, "Directory of probe_*.json files")->required();
  report_cmd->add_option("--out", report.out, "Output directory")->required();
  report_cmd->add_flag("--held-out-only", report.held_out_only, "Concept metrics on test splits only");
  report_cmd->add_option("--k", report.k, "Number of PCA components")->capture_default_str();
  add_optional(report_cmd, "--level", report.level, "Fit PCA on one latent level only");
  report_cmd->add_option("--max-points", report.max_points, "PCA subsample size, 0 = all")
      ->capture_default_str();

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  if (argv.empty()) argv.push_back("latentprobe");

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kValidationFailure;
  }

  try {
    if (*derive_cmd) cmd_derive(derive, out);
    if (*mask_cmd) cmd_mask(mask, out);
    if (*probe_cmd) cmd_probe(probe, common, out);
    if (*concept_cmd) cmd_concept(concept_args, out);
    if (*pca_cmd) cmd_pca(pca, common, out);
    if (*report_cmd) cmd_report(report, common, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoFailure;
  }
  return kSuccess;
}

}  // namespace latentprobe::cli
