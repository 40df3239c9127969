#include "latentprobe/report.hpp"

#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "latentprobe/error.hpp"

namespace latentprobe {

std::string csv_cell(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_pct(std::optional<double> fraction) {
  return fraction ? fmt::format("{:.2f}", 100.0 * *fraction) : "NA";
}

std::string table1_header() {
  return "concept,accuracy_pct,precision_pct,recall_pct,n_train,n_test,test_fraction,seed\n";
}

std::string table1_row(std::string_view concept_title, const ClassificationMetrics& m,
                       const SplitInfo& split) {
  return fmt::format("{},{},{},{},{},{},{},{}\n", csv_cell(concept_title), format_pct(m.accuracy),
                     format_pct(m.precision), format_pct(m.recall), split.n_train, split.n_test,
                     split.test_fraction, split.seed);
}

std::string table2_header() {
  return "concept,prob_corr_pct,mean0,mean1,separation,spearman_pct,n0,n1\n";
}

std::string table2_row(std::string_view concept_title, const ConceptReport& r) {
  return fmt::format("{},{},{},{},{},{},{},{}\n", csv_cell(concept_title),
                     format_pct(r.prob_correlation), r.mean_score_class0, r.mean_score_class1,
                     r.separation, format_pct(r.rank_correlation), r.n0, r.n1);
}

std::string pca_header() { return "pc1,pc2,concept,bin\n"; }

std::string pca_row(double pc1, double pc2, std::string_view concept_title, int bin) {
  return fmt::format("{},{},{},{}\n", pc1, pc2, csv_cell(concept_title), bin);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace latentprobe
