#include <doctest.h>

#include "fenrir/models.hpp"
#include "fenrir/prior.hpp"
#include "generators.hpp"

using namespace fenrir;

TEST_SUITE("prior") {

TEST_CASE("zero step is the identity with no noise") {
  const TransitionModel tr = iwp_transition(IwpPrior(1, 1), 0.0);
  CHECK(tr.phi.isApprox(Matrix::Identity(2, 2)));
  CHECK(tr.q.norm() == 0.0);
}

TEST_CASE("once integrated Wiener process over h = 2") {
  const TransitionModel tr = iwp_transition(IwpPrior(1, 1), 2.0);
  Matrix phi(2, 2), q(2, 2);
  phi << 1, 2, 0, 1;
  q << 8.0 / 3.0, 2, 2, 2;
  CHECK((tr.phi - phi).norm() < 1e-14);
  CHECK((tr.q - q).norm() < 1e-14);
  CHECK((tr.q_sqrt * tr.q_sqrt.transpose() - q).norm() < 1e-13);
}

TEST_CASE("twice integrated Wiener process over h = 1") {
  const TransitionModel tr = iwp_transition(IwpPrior(2, 1), 1.0);
  Matrix phi(3, 3), q(3, 3);
  phi << 1, 1, 0.5, 0, 1, 1, 0, 0, 1;
  q << 1.0 / 20, 1.0 / 8, 1.0 / 6, 1.0 / 8, 1.0 / 3, 1.0 / 2, 1.0 / 6, 1.0 / 2, 1;
  CHECK((tr.phi - phi).norm() < 1e-14);
  CHECK((tr.q - q).norm() < 1e-14);
}

TEST_CASE("scaled transition reproduces the step-dependent one") {
  const IwpPrior prior(3, 2);
  for (double h : {1e-3, 0.1, 0.7, 2.0}) {
    const TransitionModel tr = iwp_transition(prior, h);
    const Vector s = prior.scaling(h);
    const Matrix phi = s.asDiagonal() * prior.scaled_phi() * s.cwiseInverse().asDiagonal();
    const Matrix q_sqrt = s.asDiagonal() * prior.scaled_q_sqrt();
    CHECK((phi - tr.phi).norm() <= 1e-12 * tr.phi.norm());
    CHECK((q_sqrt * q_sqrt.transpose() - tr.q).norm() <= 1e-12 * tr.q.norm());
  }
}

TEST_CASE("projection selects derivative blocks") {
  Matrix e(1, 2);
  e << 1, 0;
  CHECK(IwpPrior(1, 1).projection(0) == e);
  Matrix e1(2, 4);
  e1 << 0, 0, 1, 0, 0, 0, 0, 1;
  CHECK(IwpPrior(1, 2).projection(1) == e1);
  Matrix e2(1, 3);
  e2 << 0, 0, 1;
  CHECK(IwpPrior(2, 1).projection(2) == e2);

  const IwpPrior p(3, 2);
  CHECK(p.state_dim() == 8);
  for (int m = 0; m <= 3; ++m)
    for (int k = 0; k <= 3; ++k) {
      const Matrix prod = p.projection(m) * p.projection(k).transpose();
      const Matrix expect = m == k ? Matrix(Matrix::Identity(2, 2)) : Matrix(Matrix::Zero(2, 2));
      CHECK(prod == expect);
    }
}

TEST_CASE("exact initial derivatives") {
  SUBCASE("exponential growth") {
    const LinearField f(Matrix::Constant(1, 1, 2.0), Vector::Zero(1));
    const InitialState init = taylor_init(f, Vector(), Vector::Ones(1), 3);
    CHECK(!init.degraded);
    CHECK((init.x - Vector{{1.0, 2.0, 4.0, 8.0}}).norm() < 1e-14);
  }
  SUBCASE("Lotka-Volterra first derivative") {
    const LotkaVolterraField f;
    const InitialState init = taylor_init(f, Vector{{2.0, 1.0, 4.0, 1.0}}, Vector{{5.0, 3.0}}, 1);
    CHECK((init.x - Vector{{5.0, 3.0, -5.0, 3.0}}).norm() < 1e-14);
  }
  SUBCASE("nu = 1 gives [y0, f(t0, y0)] for every model") {
    for (const std::string& name : model_names()) {
      const BenchmarkProblem p = make_problem(name);
      const Vector y0 = p.y0(p.true_init);
      const InitialState init = taylor_init(*p.field, p.true_params, y0, 1, p.t0);
      CHECK((init.x.head(p.dim()) - y0).norm() == 0.0);
      CHECK((init.x.tail(p.dim()) - p.field->eval(p.t0, y0, p.true_params)).norm() < 1e-13);
    }
  }
}

// Properties over hand-rolled random draws.

TEST_CASE("semigroup property") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int nu = 1 + static_cast<int>(rng.uniform() * 5);
    const IwpPrior prior(nu, 1 + static_cast<int>(rng.uniform() * 2));
    const double h1 = rng.uniform(1e-6, 1.0), h2 = rng.uniform(1e-6, 1.0);
    const Matrix lhs = iwp_transition(prior, h1).phi * iwp_transition(prior, h2).phi;
    const Matrix rhs = iwp_transition(prior, h1 + h2).phi;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("process noise is positive semidefinite") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const IwpPrior prior(1 + static_cast<int>(rng.uniform() * 5), 1);
    const double h = std::pow(10.0, rng.uniform(-3.0, 0.0));
    const Matrix q = iwp_transition(prior, h).q;
    CHECK(q.isApprox(q.transpose(), 0.0));
    const double eig = Eigen::SelfAdjointEigenSolver<Matrix>(q).eigenvalues().minCoeff();
    CHECK(eig >= -1e-12);
    const Matrix jittered = q + 1e-14 * q.trace() * Matrix::Identity(q.rows(), q.cols());
    CHECK(Eigen::LLT<Matrix>(jittered).info() == Eigen::Success);
  }
}

TEST_CASE("taylor_init on linear growth reproduces lambda^m y0") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const double lambda = rng.uniform(-2.0, 2.0), y0 = rng.uniform(-3.0, 3.0);
    const int nu = 1 + static_cast<int>(rng.uniform() * 5);
    const LinearField f(Matrix::Constant(1, 1, lambda), Vector::Zero(1));
    const Vector x = taylor_init(f, Vector(), Vector::Constant(1, y0), nu).x;
    for (int m = 0; m <= nu; ++m) CHECK(x(m) == doctest::Approx(std::pow(lambda, m) * y0).epsilon(1e-13));
  }
}

TEST_CASE("multi-dimensional formulas are the scalar ones per Kronecker block") {
  Rng rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const int nu = 1 + static_cast<int>(rng.uniform() * 5), d = 2 + static_cast<int>(rng.uniform() * 3);
    const double h = rng.uniform(0.01, 2.0);
    const TransitionModel one = iwp_transition(IwpPrior(nu, 1), h);
    const TransitionModel many = iwp_transition(IwpPrior(nu, d), h);
    const Matrix eye = Matrix::Identity(d, d);
    for (int a = 0; a <= nu; ++a)
      for (int b = 0; b <= nu; ++b) {
        CHECK((many.phi.block(a * d, b * d, d, d) - one.phi(a, b) * eye).norm() < 1e-13);
        CHECK((many.q.block(a * d, b * d, d, d) - one.q(a, b) * eye).norm() < 1e-13 * (1 + one.q.norm()));
      }
  }
}

}
