#include <doctest.h>

#include <cstring>
#include <numbers>

#include "fenrir/models.hpp"
#include "fenrir/regression.hpp"
#include "generators.hpp"
#include "oracle.hpp"

using namespace fenrir;
using namespace fenrir::testing;

namespace {

BackwardMarkovChain lv_chain(double t_end = 2.0, double dt = 0.1) {
  const BenchmarkProblem p = lotka_volterra();
  return solve_ivp(*p.field, p.true_params, p.y0(p.true_init), IwpPrior(3, 2), solver_grid(0.0, t_end, dt, {}))
      .chain;
}

double gaussian_nll(const Vector& u, const Vector& mean, const Matrix& cov) {
  const Vector e = u - mean;
  return 0.5 * (u.size() * std::log(2.0 * std::numbers::pi) + std::log(cov.determinant()) +
                e.dot(cov.ldlt().solve(e)));
}

}  // namespace

TEST_SUITE("regression") {

TEST_CASE("no observations give zero") {
  ObservationSet obs;
  obs.H = Matrix::Identity(2, 2);
  CHECK(fenrir_nll(lv_chain(), obs, 1.0, Matrix::Identity(2, 2)) == 0.0);
}

TEST_CASE("one observation at the terminal node") {
  const BackwardMarkovChain chain = lv_chain();
  ObservationSet obs;
  obs.H = Matrix(1, 2);
  obs.H << 1.0, 0.5;
  obs.times = {chain.grid.back()};
  obs.values = {Vector::Constant(1, 3.7)};
  const double kappa = 2.5;
  const Matrix r = Matrix::Constant(1, 1, 0.3);
  const Matrix lam = chain.terminal_cov_sqrt * chain.terminal_cov_sqrt.transpose();
  const Matrix h = obs.H * IwpPrior(3, 2).projection(0);
  const double expect = gaussian_nll(obs.values[0], h * chain.terminal_mean, kappa * h * lam * h.transpose() + r);
  CHECK(fenrir_nll(chain, obs, kappa, r) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("observations off the grid are rejected") {
  ObservationSet obs;
  obs.H = Matrix::Identity(2, 2);
  obs.times = {0.05};
  obs.values = {Vector::Zero(2)};
  CHECK_THROWS_AS(fenrir_nll(lv_chain(), obs, 1.0, Matrix::Identity(2, 2)), InvalidArgument);
}

TEST_CASE("uninformative data leave the solver posterior") {
  const BackwardMarkovChain chain = lv_chain();
  ObservationSet obs;
  obs.H = Matrix::Identity(2, 2);
  for (size_t i = 1; i < chain.grid.size(); i += 4) {
    obs.times.push_back(chain.grid[i]);
    obs.values.push_back(Vector{{7.0, -3.0}});
  }
  const RegressionResult r = fenrir_posterior(chain, obs, 1.0, 1e12 * Matrix::Identity(2, 2));
  const std::vector<GaussianBelief> prior = smooth(chain);
  for (size_t i = 0; i < prior.size(); ++i)
    CHECK((r.posterior[i].mean - prior[i].mean).norm() <= 1e-4 * prior[i].mean.norm());
}

TEST_CASE("near-noiseless data are interpolated under a loose prior") {
  // At unit diffusion the ODE-conditioned variance is near 1e-11, so a large
  // diffusion is needed for the data to dominate.
  const BackwardMarkovChain chain = lv_chain(1.0, 0.1);
  ObservationSet obs;
  obs.H = Matrix::Identity(2, 2);
  Rng rng(51);
  for (size_t i = 1; i < chain.grid.size(); ++i) {
    obs.times.push_back(chain.grid[i]);
    obs.values.push_back(Vector{{rng.uniform(0.0, 5.0), rng.uniform(0.0, 5.0)}});
  }
  const RegressionResult r = fenrir_posterior(chain, obs, 1e8, 1e-10 * Matrix::Identity(2, 2));
  for (int j = 0; j < obs.size(); ++j)
    CHECK((r.posterior[j + 1].mean.head(2) - obs.values[j]).cwiseAbs().maxCoeff() <= 1e-4);
}

TEST_CASE("NLL and marginals match the dense oracle") {
  for (int trial = 0; trial < 20; ++trial) {
    const LinearCase c = random_linear_case(5100 + trial);
    const LinearField f = c.field();
    const BackwardMarkovChain chain = solve_ivp(f, Vector(), c.y0, c.prior(), c.grid, {.t0 = c.t0}).chain;
    const oracle::DenseGaussian joint = oracle::densify(chain, c.kappa);
    const double expect = oracle::dense_nll(joint, c.obs, c.noise_cov);
    const RegressionResult r = fenrir_posterior(chain, c.obs, c.kappa, c.noise_cov);
    CHECK(std::abs(r.nll - expect) <= 1e-8 * std::abs(expect));
    CHECK(fenrir_nll(chain, c.obs, c.kappa, c.noise_cov) == r.nll);
    const oracle::DenseGaussian post = oracle::dense_posterior(joint, c.obs, c.noise_cov);
    for (int i = 0; i < post.nodes(); ++i) {
      CHECK(oracle::rel_diff(r.posterior[i].mean, post.marginal_mean(i), 1.0) <= 1e-8);
      CHECK(oracle::rel_diff(r.posterior[i].covariance(), post.marginal_cov(i), 1e-12) <= 1e-7);
    }
  }
}

TEST_CASE("NLL is deterministic") {
  const LinearCase c = random_linear_case(52);
  const LinearField f = c.field();
  const BackwardMarkovChain chain = solve_ivp(f, Vector(), c.y0, c.prior(), c.grid, {.t0 = c.t0}).chain;
  const double a = fenrir_nll(chain, c.obs, c.kappa, c.noise_cov);
  const double b = fenrir_nll(chain, c.obs, c.kappa, c.noise_cov);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("partial observation keeps unobserved variances at least the fully observed ones") {
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(5300 + trial);
    const Matrix l = random_matrix(rng, 2, 2, 0.5);
    const LinearField f(l, Vector::Zero(2));
    const BackwardMarkovChain chain =
        solve_ivp(f, Vector(), random_vector(rng, 2), IwpPrior(2, 2), random_grid(rng, 0.0, 10, 0.1, 0.3)).chain;
    ObservationSet full, part;
    full.H = Matrix::Identity(2, 2);
    part.H = Matrix(1, 2);
    part.H << 1.0, 0.0;
    for (int i = 1; i < chain.size(); i += 2) {
      const Vector u = random_vector(rng, 2);
      full.times.push_back(chain.grid[i]);
      full.values.push_back(u);
      part.times.push_back(chain.grid[i]);
      part.values.push_back(u.head(1));
    }
    const RegressionResult rf = fenrir_posterior(chain, full, 1.0, 0.1 * Matrix::Identity(2, 2));
    const RegressionResult rp = fenrir_posterior(chain, part, 1.0, 0.1 * Matrix::Identity(1, 1));
    for (int i = 0; i < chain.size(); ++i) {
      const Matrix cp = rp.posterior[i].covariance(), cf = rf.posterior[i].covariance();
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(cp).eigenvalues().minCoeff() >= -1e-12);
      CHECK(cp(1, 1) >= cf(1, 1) - 1e-12);
    }
  }
}

TEST_CASE("an extra observation never inflates a marginal variance") {
  for (int trial = 0; trial < 20; ++trial) {
    const LinearCase c = random_linear_case(5400 + trial);
    const LinearField f = c.field();
    const BackwardMarkovChain chain = solve_ivp(f, Vector(), c.y0, c.prior(), c.grid, {.t0 = c.t0}).chain;
    ObservationSet more = c.obs;
    Rng rng(5500 + trial);
    const int node = 1 + static_cast<int>(rng.uniform() * (chain.size() - 1));
    more.times.push_back(chain.grid[node]);
    more.values.push_back(random_vector(rng, c.obs.obs_dim()));
    const RegressionResult a = fenrir_posterior(chain, c.obs, c.kappa, c.noise_cov);
    const RegressionResult b = fenrir_posterior(chain, more, c.kappa, c.noise_cov);
    for (int i = std::max(0, node - 1); i <= std::min(chain.size() - 1, node + 1); ++i) {
      const Vector va = a.posterior[i].covariance().diagonal(), vb = b.posterior[i].covariance().diagonal();
      CHECK((vb - va).maxCoeff() <= 1e-12);
    }
  }
}

}
