#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "latentprobe/matrix.hpp"
#include "latentprobe/probe.hpp"

namespace latentprobe {

/// Unit direction of a probe's coefficient vector, in the probe's
/// standardized feature space.
struct ConceptVector {
  Vector direction;
  double norm_original = 0.0;
  std::string source;
};

/// Concept-representation statistics for one concept.
struct ConceptReport {
  std::optional<double> prob_correlation;  // Pearson; empty on zero variance
  std::optional<double> rank_correlation;  // Spearman self-check
  double mean_score_class0 = 0.0;
  double mean_score_class1 = 0.0;
  double separation = 0.0;  // mean_score_class1 - mean_score_class0
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

ConceptVector concept_vector(const LogisticProbe& p);

/// s_i = row_i . direction. Rows must already be in the probe's feature space.
Vector concept_scores(const Matrix& standardized, const ConceptVector& v);

/// Standardizes raw rows with the probe's scaling, then scores them.
Vector concept_scores(const LogisticProbe& p, const Matrix& raw);

ConceptReport concept_report(std::span<const double> scores, std::span<const double> probs,
                             std::span<const std::uint8_t> labels);

std::optional<double> pearson(std::span<const double> a, std::span<const double> b);
/// Pearson correlation of average ranks (ties share the mean rank).
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace latentprobe
