#include <doctest.h>

#include "fenrir/linearize.hpp"
#include "fenrir/models.hpp"
#include "generators.hpp"

using namespace fenrir;
using namespace fenrir::testing;

TEST_SUITE("linearize") {

TEST_CASE("residual vanishes at the exact initial state") {
  const BenchmarkProblem p = lotka_volterra();
  const IwpPrior prior(4, 2);
  const Vector x = taylor_init(*p.field, p.true_params, p.y0(p.true_init), 4, p.t0).x;
  CHECK(information_residual(*p.field, p.true_params, p.t0, x, prior).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("residual of linear growth by substitution") {
  const LinearField f(Matrix::Constant(1, 1, 2.0), Vector::Zero(1));
  const Vector r = information_residual(f, Vector(), 0.0, Vector{{3.0, 7.0}}, IwpPrior(1, 1));
  CHECK(r(0) == doctest::Approx(1.0));
}

TEST_CASE("affine solution set has zero residual") {
  Rng rng(21);
  const Matrix l = random_matrix(rng, 2, 2);
  const Vector b = random_vector(rng, 2);
  const LinearField f(l, b);
  const IwpPrior prior(2, 2);
  Vector x = random_vector(rng, prior.state_dim());
  x.segment(2, 2) = l * x.head(2) + b;
  CHECK(information_residual(f, Vector(), 0.3, x, prior).norm() < 1e-14);
}

TEST_CASE("EK0 drops the Jacobian") {
  const BenchmarkProblem p = lotka_volterra();
  const AffineObservation a = linearize(*p.field, p.true_params, 0.0, Vector{{5.0, 3.0}}, Linearization::EK0,
                                        IwpPrior(2, 2));
  CHECK(a.L.norm() == 0.0);
  CHECK((a.b - p.field->eval(0.0, Vector{{5.0, 3.0}}, p.true_params)).norm() == 0.0);
}

TEST_CASE("EK1 on linear growth is exact") {
  const LinearField f(Matrix::Constant(1, 1, 2.0), Vector::Zero(1));
  for (double y : {-4.0, 0.0, 1.5, 100.0}) {
    const AffineObservation a = linearize(f, Vector(), 0.0, Vector::Constant(1, y), Linearization::EK1,
                                          IwpPrior(3, 1));
    CHECK(a.L(0, 0) == 2.0);
    CHECK(a.b(0) == 0.0);
  }
}

TEST_CASE("EK1 Lotka-Volterra Jacobian by hand") {
  const LotkaVolterraField f;
  const AffineObservation a = linearize(f, Vector{{2.0, 1.0, 4.0, 1.0}}, 0.0, Vector{{5.0, 3.0}},
                                        Linearization::EK1, IwpPrior(1, 2));
  Matrix j(2, 2);
  j << -1, -5, 3, 1;
  CHECK((a.L - j).norm() < 1e-14);
  // C = E1 - E0 L^T.
  const IwpPrior prior(1, 2);
  CHECK((a.C - (prior.projection(1) - a.L * prior.projection(0)).transpose()).norm() < 1e-14);
}

TEST_CASE("linearisation names round-trip") {
  CHECK(parse_linearization("EK1") == Linearization::EK1);
  CHECK(parse_linearization(to_string(Linearization::EK0)) == Linearization::EK0);
  CHECK_THROWS_AS(parse_linearization("ek2"), InvalidArgument);
}

TEST_CASE("affine fields linearise to themselves anywhere") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform() * 3);
    const Matrix l = random_matrix(rng, d, d);
    const Vector b = random_vector(rng, d);
    const LinearField f(l, b);
    const AffineObservation a = linearize(f, Vector(), 0.0, random_vector(rng, d, 10.0), Linearization::EK1,
                                          IwpPrior(2, d));
    CHECK((a.L - l).norm() < 1e-14);
    CHECK((a.b - b).norm() < 1e-12 * (1 + b.norm()));
  }
}

TEST_CASE("expansion matches the field at the linearisation point") {
  Rng rng(23);
  for (const std::string& name : model_names()) {
    const BenchmarkProblem p = make_problem(name);
    const IwpPrior prior(2, p.dim());
    for (int trial = 0; trial < 20; ++trial) {
      const Vector y = random_state(rng, p);
      const Vector f = p.field->eval(0.0, y, p.true_params);
      for (Linearization mode : {Linearization::EK0, Linearization::EK1}) {
        const AffineObservation a = linearize(*p.field, p.true_params, 0.0, y, mode, prior);
        CHECK((a.L * y + a.b - f).norm() <= 1e-12 * (1 + f.norm()));
      }
    }
  }
}

TEST_CASE("EK1 Jacobian agrees with central differences") {
  Rng rng(24);
  for (const std::string& name : model_names()) {
    const BenchmarkProblem p = make_problem(name);
    const IwpPrior prior(1, p.dim());
    for (int trial = 0; trial < 20; ++trial) {
      const Vector y = random_state(rng, p);
      const Matrix j = linearize(*p.field, p.true_params, 0.0, y, Linearization::EK1, prior).L;
      const Matrix fd = fd_jacobian(*p.field, 0.0, y, p.true_params);
      CHECK((j - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

}
