#include <cmath>

#include "doctest.h"

#include "latentprobe/error.hpp"
#include "latentprobe/pca.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace latentprobe;
using latentprobe::testing::random_matrix;

namespace {

double angle(const Vector& a, const Vector& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c));
}

}  // namespace

TEST_CASE("points on a line") {
  Matrix x(5, 2);
  for (int i = 0; i < 5; ++i) x.row(i) << i - 2.0, 2.0 * (i - 2.0);
  const auto m = fit_pca(x, 1);
  CHECK(m.components(0, 0) == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(m.components(0, 1) == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
  CHECK(m.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("components match an independent eigen-solve of the covariance") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Matrix x = random_matrix(50, 6, seed);
    for (Eigen::Index j = 0; j < 6; ++j) x.col(j) *= static_cast<double>(6 - j);  // distinct spectrum
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    oracle::jacobi_eigen(oracle::covariance(x), values, vectors);

    const auto m = fit_pca(x, 6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      CHECK(angle(m.components.row(i).transpose(), vectors.col(i)) <= 1e-6);
      CHECK(m.explained_variance[i] == doctest::Approx(values[i]).epsilon(1e-9));
    }
    CHECK(m.explained_variance_ratio.sum() == doctest::Approx(1.0).epsilon(1e-8));
    for (Eigen::Index i = 1; i < 6; ++i) CHECK(m.explained_variance_ratio[i] <= m.explained_variance_ratio[i - 1]);
  }
}

TEST_CASE("projection properties") {
  const Matrix x = random_matrix(80, 5, 9);
  const auto m = fit_pca(x, 5);

  const Matrix mean_row = m.mean.transpose();
  CHECK(project(m, mean_row).cwiseAbs().maxCoeff() <= 1e-12);
  const Matrix along = mean_row + 2.5 * m.components.row(0);
  const Matrix pa = project(m, along);
  CHECK(pa(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(pa.rightCols(4).cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix z = project(m, x);
  const Matrix back = (z * m.components).rowwise() + m.mean.transpose();
  CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-6);

  const Matrix zc = z.rowwise() - z.colwise().mean();
  const Matrix cov = zc.transpose() * zc / static_cast<double>(x.rows() - 1);
  for (Eigen::Index i = 0; i < 5; ++i) {
    CHECK(cov(i, i) == doctest::Approx(m.explained_variance_ratio[i] * m.total_variance).epsilon(1e-10));
    for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(cov(i, j)) <= 1e-10 * m.total_variance);
  }

  for (Eigen::Index i = 0; i < 5; ++i) {
    Eigen::Index arg = 0;
    m.components.row(i).cwiseAbs().maxCoeff(&arg);
    CHECK(m.components(i, arg) > 0.0);
  }
}

TEST_CASE("planted rank-2 structure") {
  const Matrix scores = random_matrix(300, 2, 4) * 10.0;
  const Matrix basis = random_matrix(2, 20, 5);
  const Matrix x = scores * basis + 0.01 * random_matrix(300, 20, 6);
  const auto m = fit_pca(x, 2);
  CHECK(m.explained_variance_ratio.sum() >= 0.999);
}

TEST_CASE("pca errors") {
  CHECK_THROWS_AS(fit_pca(Matrix::Ones(1, 3), 1), ValidationError);
  CHECK_THROWS_AS(fit_pca(random_matrix(10, 3, 1), 0), ValidationError);
  CHECK_THROWS_AS(fit_pca(random_matrix(10, 3, 1), 4), ValidationError);
  CHECK_THROWS_AS(fit_pca(Matrix::Ones(10, 3), 1), ValidationError);
  const auto m = fit_pca(random_matrix(10, 3, 1), 2);
  CHECK_THROWS_AS(project(m, Matrix::Zero(2, 4)), ValidationError);
  CHECK(to_json(m)["components"].size() == 2);
}
