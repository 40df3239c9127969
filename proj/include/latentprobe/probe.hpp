#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "latentprobe/matrix.hpp"

namespace latentprobe {

enum class ClassWeighting { none, balanced };

struct ProbeConfig {
  double l2_strength = 1.0;
  int max_iters = 500;
  double tolerance = 1e-6;
  bool standardize = true;
  std::uint64_t seed = 42;
  ClassWeighting class_weighting = ClassWeighting::none;

  void validate() const;
};

/// A trained binary logistic-regression probe.
///
/// `weights` live in standardized feature space: a raw row x is mapped to
/// (x - feature_means) / feature_scales before the dot product. With
/// standardize = false the means are 0 and the scales 1.
struct LogisticProbe {
  std::string concept_name;
  Vector weights;
  double intercept = 0.0;
  Vector feature_means;
  Vector feature_scales;
  bool converged = false;
  int iterations = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;
  ProbeConfig config;

  std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }
  Matrix standardize(const Matrix& x) const;
};

/// Regularized mean logistic loss over standardized features:
/// (1/N) sum_i c_i log(1 + exp(-s_i z_i)) + (l2/N) |w|^2 / 2, intercept unpenalized.
/// `sample_weights` are the per-sample c_i (all ones when unweighted).
class LogisticObjective {
 public:
  LogisticObjective(const Matrix& x, std::span<const std::uint8_t> y, Vector sample_weights,
                    double l2_strength);

  /// Loss at (w, b); fills `grad_w`, `grad_b` when non-null.
  double evaluate(const Vector& w, double b, Vector* grad_w, double* grad_b) const;

  Eigen::Index dim() const { return x_.cols(); }

 private:
  const Matrix& x_;
  Vector targets_;
  Vector sample_weights_;
  double l2_;
};

/// Per-sample weights for the chosen class weighting. Balanced weights are
/// N / (2 n_class), so they sum to N.
Vector class_sample_weights(std::span<const std::uint8_t> y, ClassWeighting weighting);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Deterministic stratified partition of row ids. Each class contributes
/// round(test_fraction * n_class) rows to the test side.
Split split_stratified(std::span<const std::uint8_t> y, double test_fraction, std::uint64_t seed);

/// Full-batch gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking. Non-convergence is reported through `converged`, not thrown.
LogisticProbe train_probe(const Matrix& x, std::span<const std::uint8_t> y, const ProbeConfig& cfg);

double sigmoid(double z);

/// Signed margin w . x~ + b for each raw row.
Vector decision_function(const LogisticProbe& p, const Matrix& x);
Vector predict_proba(const LogisticProbe& p, const Matrix& x);
LabelVector classify(const LogisticProbe& p, const Matrix& x, double cutoff = 0.5);

struct ClassificationMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  std::optional<double> precision;  // empty when tp + fp == 0
  std::optional<double> recall;     // empty when tp + fn == 0
};

ClassificationMetrics classification_metrics(std::span<const std::uint8_t> y_true,
                                             std::span<const std::uint8_t> y_pred);

nlohmann::json to_json(const ProbeConfig& cfg);
ProbeConfig probe_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LogisticProbe& p);
LogisticProbe probe_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassificationMetrics& m);

}  // namespace latentprobe
