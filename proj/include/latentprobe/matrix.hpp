#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace latentprobe {

/// Row-major dense matrices. Rows are samples, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Binary labels, one byte per sample.
using LabelVector = std::vector<std::uint8_t>;

/// Gathers the given rows of `x` in order.
template <typename Derived>
auto take_rows(const Eigen::MatrixBase<Derived>& x, std::span<const std::size_t> rows) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
      static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

inline LabelVector take_labels(std::span<const std::uint8_t> y, std::span<const std::size_t> rows) {
  LabelVector out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(y[r]);
  return out;
}

}  // namespace latentprobe
