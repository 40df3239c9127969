#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "latentprobe/matrix.hpp"

namespace latentprobe {

/// Principal axes of a data matrix. `components` rows are orthonormal and
/// sorted by decreasing explained variance; the largest-magnitude entry of
/// each row is positive.
struct PcaModel {
  Vector mean;
  Matrix components;                 // k x D
  Vector explained_variance;         // per component, N-1 denominator
  Vector explained_variance_ratio;   // share of total variance
  double total_variance = 0.0;

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
};

/// SVD of the mean-centred data. Requires N >= 2 and 1 <= k <= min(N, D).
PcaModel fit_pca(const Matrix& x, std::size_t k);

/// (x - mean) * components^T, N x k.
Matrix project(const PcaModel& m, const Matrix& x);

nlohmann::json to_json(const PcaModel& m);

}  // namespace latentprobe
