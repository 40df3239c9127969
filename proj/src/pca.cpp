#include "latentprobe/pca.hpp"

#include <algorithm>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "latentprobe/error.hpp"

namespace latentprobe {

PcaModel fit_pca(const Matrix& x, std::size_t k) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) throw ValidationError("fit_pca needs at least 2 rows");
  if (k < 1 || k > static_cast<std::size_t>(std::min(n, d))) {
    throw ValidationError(fmt::format("k = {} outside [1, min(N, D) = {}]", k, std::min(n, d)));
  }
  if (!x.allFinite()) throw ValidationError("fit_pca: non-finite value");

  PcaModel m;
  m.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean.transpose();
  const double denom = static_cast<double>(n - 1);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Vector variances = svd.singularValues().array().square() / denom;
  m.total_variance = centered.squaredNorm() / denom;
  if (!(m.total_variance > 0.0)) throw ValidationError("fit_pca: zero variance (all rows identical)");

  const auto kk = static_cast<Eigen::Index>(k);
  m.components = svd.matrixV().leftCols(kk).transpose();
  for (Eigen::Index i = 0; i < kk; ++i) {
    Eigen::Index arg = 0;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    if (m.components(i, arg) < 0.0) m.components.row(i) *= -1.0;
  }
  m.explained_variance = variances.head(kk);
  m.explained_variance_ratio = m.explained_variance / m.total_variance;
  return m;
}

Matrix project(const PcaModel& m, const Matrix& x) {
  if (x.cols() != m.mean.size()) {
    throw ValidationError(
        fmt::format("dimension mismatch: PCA fitted on {} features, got {}", m.mean.size(), x.cols()));
  }
  return (x.rowwise() - m.mean.transpose()) * m.components.transpose();
}

nlohmann::json to_json(const PcaModel& m) {
  const auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.components.rows(); ++i) comps.push_back(vec(m.components.row(i)));
  return nlohmann::json{{"mean", vec(m.mean)},
                        {"components", comps},
                        {"explained_variance", vec(m.explained_variance)},
                        {"explained_variance_ratio", vec(m.explained_variance_ratio)},
                        {"total_variance", m.total_variance}};
}

}  // namespace latentprobe
