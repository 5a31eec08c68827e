#include <doctest.h>

#include "fenrir/sqrt_ops.hpp"
#include "generators.hpp"

using namespace fenrir;
using namespace fenrir::testing;

TEST_SUITE("sqrt_ops") {

TEST_CASE("reduce_to_upper preserves the Gram matrix") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform() * 12), cols = 1 + static_cast<int>(rng.uniform() * 8);
    Matrix a = random_matrix(rng, rows, cols);
    int top = 0;
    if (rng.uniform() < 0.5) {
      top = std::min(rows, cols);
      a.topRows(top) = a.topRows(top).triangularView<Eigen::Upper>().toDenseMatrix();
    }
    const Matrix gram = a.transpose() * a;
    Matrix r = a;
    sqrt_ops::reduce_to_upper(r, top);
    CHECK((r.transpose() * r - gram).norm() <= 1e-12 * (1 + gram.norm()));
    for (int j = 0; j < cols; ++j)
      for (int i = j + 1; i < rows; ++i) CHECK(r(i, j) == 0.0);
  }
}

TEST_CASE("triangularize returns a lower factor of A^T A") {
  Rng rng(32);
  const Matrix a = random_matrix(rng, 9, 4);
  const Matrix l = sqrt_ops::triangularize(a);
  CHECK(l.isLowerTriangular(0.0));
  CHECK((l * l.transpose() - a.transpose() * a).norm() < 1e-12);
}

TEST_CASE("prediction matches the covariance formulas") {
  Rng rng(33);
  const int n = 4;
  const Matrix a = random_matrix(rng, n, n), l = random_matrix(rng, n, n), q = random_matrix(rng, n, n);
  const Vector m = random_vector(rng, n), off = random_vector(rng, n);
  const sqrt_ops::PredictResult r = sqrt_ops::predict_with_gain(m, l, a, &off, q);
  const Matrix sigma = l * l.transpose();
  const Matrix pred = a * sigma * a.transpose() + q * q.transpose();
  CHECK((r.mean - (a * m + off)).norm() < 1e-12);
  CHECK((r.cov_sqrt * r.cov_sqrt.transpose() - pred).norm() < 1e-10 * pred.norm());
  // Backward kernel: G = Sigma A^T Pred^-1, P P^T = Sigma - G Pred G^T.
  const Matrix g = sigma * a.transpose() * pred.inverse();
  CHECK((r.gain - g).norm() < 1e-9 * (1 + g.norm()));
  const Matrix p = sigma - g * pred * g.transpose();
  CHECK((r.noise_sqrt * r.noise_sqrt.transpose() - p).norm() < 1e-9 * (1 + sigma.norm()));
}

TEST_CASE("update matches the Kalman formulas") {
  Rng rng(34);
  const int n = 5, k = 2;
  const Matrix l = random_matrix(rng, n, n), mo = random_matrix(rng, k, n), rs = random_matrix(rng, k, k);
  const Vector m = random_vector(rng, n), u = random_vector(rng, k);
  const sqrt_ops::UpdateResult r = sqrt_ops::update(m, l, mo, u, rs, sqrt_ops::SingularPolicy::Throw);
  const Matrix sigma = l * l.transpose();
  const Matrix s = mo * sigma * mo.transpose() + rs * rs.transpose();
  const Matrix gain = sigma * mo.transpose() * s.inverse();
  const Vector e = u - mo * m;
  CHECK((r.residual - e).norm() < 1e-12);
  CHECK((r.mean - (m + gain * e)).norm() < 1e-10);
  CHECK((r.cov_sqrt * r.cov_sqrt.transpose() - (sigma - gain * s * gain.transpose())).norm() < 1e-10);
  CHECK(r.log_det_innov == doctest::Approx(std::log(s.determinant())).epsilon(1e-12));
  CHECK(r.mahalanobis == doctest::Approx(e.dot(s.inverse() * e)).epsilon(1e-10));
}

TEST_CASE("singular triangular systems fall back to the pseudo-inverse") {
  Matrix u = Matrix::Zero(2, 2);
  u(0, 0) = 2.0;
  bool pseudo = false;
  const Matrix x = sqrt_ops::solve_upper(u, Matrix::Identity(2, 2), &pseudo);
  CHECK(pseudo);
  CHECK(x(0, 0) == doctest::Approx(0.5));
  CHECK(x(1, 1) == 0.0);
}

}
