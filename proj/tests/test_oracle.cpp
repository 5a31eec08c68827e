#include <doctest.h>

#include <numbers>

#include "generators.hpp"
#include "oracle.hpp"

using namespace fenrir;
using namespace fenrir::testing;

namespace {

struct Solved {
  LinearCase c;
  BackwardMarkovChain chain;
};

Solved solved(std::uint64_t seed) {
  Solved s{random_linear_case(seed), {}};
  const LinearField f = s.c.field();
  s.chain = solve_ivp(f, Vector(), s.c.y0, s.c.prior(), s.c.grid, {.t0 = s.c.t0}).chain;
  return s;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("single node is the terminal distribution") {
  Solved s = solved(61);
  BackwardMarkovChain& ch = s.chain;
  ch.grid = {ch.grid.back()};
  ch.gains.clear();
  ch.offsets.clear();
  ch.noise_sqrt.clear();
  const oracle::DenseGaussian j = oracle::densify(ch, 3.0);
  CHECK((j.marginal_mean(0) - ch.terminal_mean).norm() == 0.0);
  const Matrix cov = 3.0 * ch.terminal_cov_sqrt * ch.terminal_cov_sqrt.transpose();
  CHECK(oracle::rel_diff(j.marginal_cov(0), cov) < 1e-15);
}

TEST_CASE("densified marginals equal the smoother") {
  for (int trial = 0; trial < 20; ++trial) {
    const Solved s = solved(6200 + trial);
    const oracle::DenseGaussian j = oracle::densify(s.chain, 1.0);
    const std::vector<GaussianBelief> m = smooth(s.chain);
    for (int i = 0; i < j.nodes(); ++i) {
      CHECK((m[i].mean - j.marginal_mean(i)).norm() <= 1e-9 * (1 + m[i].mean.norm()));
      CHECK((m[i].covariance() - j.marginal_cov(i)).norm() <= 1e-9 * (1 + j.marginal_cov(i).norm()));
    }
  }
}

TEST_CASE("zero gains decouple the nodes") {
  Solved s = solved(63);
  for (Matrix& g : s.chain.gains) g.setZero();
  const oracle::DenseGaussian j = oracle::densify(s.chain, 1.0);
  const int n = j.block;
  for (int a = 0; a < j.nodes(); ++a)
    for (int b = 0; b < j.nodes(); ++b)
      if (a != b) CHECK(j.cov.block(a * n, b * n, n, n).cast<double>().norm() == 0.0);
}

TEST_CASE("single observation is one Gaussian log-density") {
  const Solved s = solved(64);
  const oracle::DenseGaussian j = oracle::densify(s.chain, 1.0);
  ObservationSet obs;
  obs.H = s.c.obs.H;
  obs.times = {s.chain.grid.back()};
  obs.values = {Vector::Ones(obs.H.rows())};
  const int last = j.nodes() - 1, d = s.c.d;
  const Vector mean = obs.H * j.marginal_mean(last).head(d);
  const Matrix cov = obs.H * j.marginal_cov(last).topLeftCorner(d, d) * obs.H.transpose() + s.c.noise_cov;
  const Vector e = obs.values[0] - mean;
  const double expect = 0.5 * (e.size() * std::log(2.0 * std::numbers::pi) + std::log(cov.determinant()) +
                               e.dot(cov.ldlt().solve(e)));
  CHECK(oracle::dense_nll(j, obs, s.c.noise_cov) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("dense NLL equals the recursion") {
  for (int trial = 0; trial < 20; ++trial) {
    const Solved s = solved(6500 + trial);
    const double dense = oracle::dense_nll(oracle::densify(s.chain, s.c.kappa), s.c.obs, s.c.noise_cov);
    CHECK(std::abs(fenrir_nll(s.chain, s.c.obs, s.c.kappa, s.c.noise_cov) - dense) <= 1e-8 * std::abs(dense));
  }
}

TEST_CASE("overwhelming noise reduces the NLL to independent terms") {
  const Solved s = solved(66);
  const oracle::DenseGaussian j = oracle::densify(s.chain, 1.0);
  const int k = s.c.obs.obs_dim(), d = s.c.d;
  const Matrix r = 1e8 * Matrix::Identity(k, k);
  double sum = 0.0;
  for (int o = 0; o < s.c.obs.size(); ++o) {
    int node = 0;
    while (j.times[node] != s.c.obs.times[o]) ++node;
    const Vector e = s.c.obs.values[o] - s.c.obs.H * j.marginal_mean(node).head(d);
    sum += 0.5 * (k * std::log(2.0 * std::numbers::pi * 1e8) + e.squaredNorm() / 1e8);
  }
  CHECK(std::abs(oracle::dense_nll(j, s.c.obs, r) - sum) <= 1e-3);
}

TEST_CASE("covariances are symmetric and positive semidefinite") {
  for (int trial = 0; trial < 10; ++trial) {
    const Solved s = solved(6700 + trial);
    const oracle::DenseGaussian j = oracle::densify(s.chain, s.c.kappa);
    const Matrix cov = j.cov.cast<double>();
    CHECK((cov - cov.transpose()).norm() <= 1e-14 * cov.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(cov).eigenvalues().minCoeff() >= -1e-10);
  }
}

}
