#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "latentprobe/concept.hpp"
#include "latentprobe/probe.hpp"

namespace latentprobe {

/// Split bookkeeping printed next to the classification metrics.
struct SplitInfo {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
};

/// Quotes a CSV cell when it contains a comma, quote or newline.
std::string csv_cell(std::string_view s);

/// Percentage with two decimals, "NA" when undefined.
std::string format_pct(std::optional<double> fraction);

std::string table1_header();
std::string table1_row(std::string_view concept_title, const ClassificationMetrics& m,
                       const SplitInfo& split);

/// Means and separation are printed with round-trip precision so that the
/// separation column equals mean1 - mean0 exactly after parsing.
std::string table2_header();
std::string table2_row(std::string_view concept_title, const ConceptReport& r);

std::string pca_header();
std::string pca_row(double pc1, double pc2, std::string_view concept_title, int bin);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace latentprobe
