#include <doctest.h>

#include <cstring>

#include "fenrir/bench.hpp"
#include "fenrir/estimate.hpp"
#include "fenrir/lbfgs.hpp"
#include "generators.hpp"

using namespace fenrir;
using namespace fenrir::testing;

TEST_SUITE("estimate") {

TEST_CASE("L-BFGS on a quadratic") {
  const LbfgsResult r = lbfgs_minimize([](const Vector& x) { return (x(0) - 3.0) * (x(0) - 3.0); },
                                       Vector::Zero(1));
  CHECK(std::abs(r.x(0) - 3.0) <= 1e-6);
  CHECK(r.status == FitStatus::Converged);
}

TEST_CASE("L-BFGS on the Rosenbrock valley") {
  auto f = [](const Vector& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
  const LbfgsResult r = lbfgs_minimize(f, Vector{{-1.2, 1.0}}, {.max_iter = 2000});
  CHECK((r.x - Vector::Ones(2)).norm() <= 1e-3);
}

TEST_CASE("finite differences avoid failed evaluations") {
  auto f = [](const Vector& x) { return x(0) < 0.0 ? 1e10 : x(0) * x(0); };
  const Vector g = fd_gradient(f, Vector::Zero(1), 0.0, 1e-6, 1e10);
  CHECK(std::abs(g(0)) < 1e-5);
}

TEST_CASE("starting points") {
  const BenchmarkProblem p = lotka_volterra();
  const ObservationSet obs = generate_data(p, p.noise_low, 3);
  const ParamSpace space = build_param_space(p, Method::Fenrir);
  const Vector a = init_params(p, space, obs, 17), b = init_params(p, space, obs, 17);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
  CHECK(space.contains(a));
  for (int i : space.indices(ParamRole::Ode)) CHECK(a(i) >= 0.0);

  const BenchmarkProblem s = seir();
  const ObservationSet so = generate_data(s, s.noise_low, 3);
  const ParamSpace ss = build_param_space(s, Method::Fenrir);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Vector x = init_params(s, ss, so, seed);
    for (int i : ss.indices(ParamRole::Init)) {
      CHECK(x(i) >= 0.0);
      CHECK(x(i) <= 0.5);
    }
  }
}

TEST_CASE("parameter space layout") {
  const BenchmarkProblem p = lotka_volterra();
  const ParamSpace f = build_param_space(p, Method::Fenrir);
  CHECK(f.size() == 8);
  CHECK(f[6].role == ParamRole::Noise);
  CHECK(f[7].role == ParamRole::Diffusion);
  CHECK(build_param_space(p, Method::Rk).size() == 6);
  CHECK(build_param_space(pendulum(), Method::Fenrir).size() == 3);
}

TEST_CASE("Fenrir objective prefers the truth on low-noise Lotka-Volterra") {
  const BenchmarkProblem p = lotka_volterra();
  const Objective objective(p, generate_data(p, p.noise_low, 5));
  const ParamSpace& space = objective.space();
  Vector x(space.size());
  x << p.true_params, p.true_init, p.noise_low, 1.0;
  // Diffusion at its best decade with everything else at the truth.
  double best = objective.natural(x);
  const int k = space.indices(ParamRole::Diffusion).front();
  for (double e = -20; e <= 20; e += 1.0) {
    Vector y = x;
    y(k) = std::pow(10.0, e);
    if (const double v = objective.natural(y); v < best) {
      best = v;
      x = y;
    }
  }
  for (int i : space.indices(ParamRole::Ode)) {
    Vector y = x;
    y(i) *= 2.0;
    CHECK(objective.natural(y) > best);
  }
}

TEST_CASE("RK objective vanishes at the truth without noise") {
  const BenchmarkProblem p = lotka_volterra();
  const Objective objective(p, generate_data(p, 0.0, 5), {.method = Method::Rk, .rk = truth_rk_options()});
  Vector x(6);
  x << p.true_params, p.true_init;
  CHECK(objective.natural(x) <= 1e-10);
}

TEST_CASE("objective is finite and deterministic on the linear model") {
  const BenchmarkProblem p = linear_test();
  const Objective objective(p, generate_data(p, p.noise_low, 9));
  const ParamSpace& space = objective.space();
  Rng rng(91);
  for (int trial = 0; trial < 50; ++trial) {
    Vector z(space.size());
    for (int i = 0; i < z.size(); ++i) z(i) = rng.normal(0.0, 2.0);
    const double a = objective(z), b = objective(z);
    CHECK(std::isfinite(a));
    CHECK(a < 1e10);
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_CASE("gradient estimates are stable in the step size") {
  const BenchmarkProblem p = linear_test();
  const Objective objective(p, generate_data(p, p.noise_low, 9));
  Vector x(objective.space().size());
  x << 3.0, 0.7, 0.9, 0.1, 0.02, 1.0;
  const Vector z = objective.space().to_unconstrained(x);
  const ScalarFunction f = [&](const Vector& v) { return objective(v); };
  const double fz = f(z);
  const Vector g5 = fd_gradient(f, z, fz, 1e-5, 1e10), g7 = fd_gradient(f, z, fz, 1e-7, 1e10);
  CHECK((g5 - g7).norm() <= 1e-2 * g5.norm());
}

TEST_CASE("fits stay inside the bounds") {
  const BenchmarkProblem p = linear_test();
  const Objective objective(p, generate_data(p, p.noise_low, 4));
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const FitResult r = fit(objective, initial_point(objective, seed), default_schedule(p, Method::Fenrir));
    CHECK(objective.space().contains(r.params));
    CHECK(r.nll == doctest::Approx(objective.natural(r.params)));
  }
}

TEST_CASE("linear model parameters are recovered") {
  const BenchmarkProblem p = linear_test();
  const Objective objective(p, generate_data(p, p.noise_low, 4));
  const FitResult r = fit(objective, initial_point(objective, 2), default_schedule(p, Method::Fenrir));
  CHECK(std::abs(r.params(0) - 4.0) <= 0.2);
  CHECK(std::abs(r.params(1) - 0.5) <= 0.1);
}

TEST_CASE("staged schedule") {
  const std::vector<Stage> s = default_schedule(lotka_volterra(), Method::Fenrir);
  REQUIRE(s.size() == 2);
  CHECK(s[0].name == "noise-diffusion-only");
  CHECK(s[1].name == "joint");
  CHECK(default_schedule(lotka_volterra(), Method::Rk).size() == 1);
}

TEST_CASE("trajectory error") {
  const BenchmarkProblem p = linear_test();
  CHECK(trmse(p, p.true_params, p.true_init) <= 1e-6);
  // y' = -y contracts, so a shift of eps in y0 never grows.
  BenchmarkProblem decay = p;
  decay.field = std::make_shared<LinearField>(-Matrix::Identity(2, 2), Vector::Zero(2));
  decay.param_names.clear();
  decay.param_bounds.clear();
  decay.true_params = Vector();
  const double eps = 1e-3;
  CHECK(trmse(decay, Vector(), decay.true_init + Vector{{eps, 0.0}}) <= eps);
}

TEST_CASE("trajectory error ignores the noise realisation") {
  const BenchmarkProblem p = lotka_volterra();
  const Vector theta = p.true_params * 1.01;
  const double a = trmse(p, theta, p.true_init);
  const Objective o1(p, generate_data(p, p.noise_high, 1)), o2(p, generate_data(p, p.noise_high, 2));
  FitResult f;
  f.params = Vector(8);
  f.params << theta, p.true_init, 0.1, 1.0;
  CHECK(trmse(o1, f) == a);
  CHECK(trmse(o2, f) == a);
}

}
