#include "latentprobe/concept.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "latentprobe/error.hpp"

namespace latentprobe {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

ConceptVector concept_vector(const LogisticProbe& p) {
  const double norm = p.weights.norm();
  if (!(norm > 0.0)) {
    throw ValidationError(fmt::format("probe '{}' has a zero weight vector", p.concept_name));
  }
  return ConceptVector{p.weights / norm, norm, p.concept_name};
}

Vector concept_scores(const Matrix& standardized, const ConceptVector& v) {
  if (standardized.cols() != v.direction.size()) {
    throw ValidationError(fmt::format("dimension mismatch: concept vector has {} entries, rows have {}",
                                      v.direction.size(), standardized.cols()));
  }
  return standardized * v.direction;
}

Vector concept_scores(const LogisticProbe& p, const Matrix& raw) {
  return concept_scores(p.standardize(raw), concept_vector(p));
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("pearson: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("spearman: length mismatch");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

ConceptReport concept_report(std::span<const double> scores, std::span<const double> probs,
                             std::span<const std::uint8_t> labels) {
  if (scores.size() != probs.size() || scores.size() != labels.size()) {
    throw ValidationError(fmt::format("concept_report: length mismatch ({} scores, {} probs, {} labels)",
                                      scores.size(), probs.size(), labels.size()));
  }
  ConceptReport r;
  double sum0 = 0.0, sum1 = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] > 1) throw ValidationError("concept_report: labels must be 0 or 1");
    if (labels[i]) {
      sum1 += scores[i];
      ++r.n1;
    } else {
      sum0 += scores[i];
      ++r.n0;
    }
  }
  if (r.n0 == 0) throw ValidationError("class 0 empty");
  if (r.n1 == 0) throw ValidationError("class 1 empty");
  r.mean_score_class0 = sum0 / static_cast<double>(r.n0);
  r.mean_score_class1 = sum1 / static_cast<double>(r.n1);
  r.separation = r.mean_score_class1 - r.mean_score_class0;
  r.prob_correlation = pearson(scores, probs);
  r.rank_correlation = spearman(scores, probs);
  return r;
}

}  // namespace latentprobe
