#include <doctest.h>

#include <limits>

#include "fenrir/transforms.hpp"
#include "generators.hpp"

using namespace fenrir;
using namespace fenrir::testing;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_SUITE("transforms") {

TEST_CASE("round trip for every bound type") {
  const std::vector<ParamSpec> specs = {
      {"free", ParamRole::Ode, {}, Transform::Identity},
      {"boxed", ParamRole::Ode, {-2.0, 3.0}, Transform::Identity},
      {"positive", ParamRole::Ode, {0.0, kInf}, Transform::Log},
      {"log-box", ParamRole::Ode, {1e-6, 1e2}, Transform::Log},
      {"logit", ParamRole::Ode, {-1.0, 4.0}, Transform::LogitBox},
      {"wide", ParamRole::Diffusion, {1e-20, 1e50}, Transform::Log},
  };
  Rng rng(81);
  for (const ParamSpec& s : specs) {
    for (int trial = 0; trial < 200; ++trial) {
      double x;
      if (s.bounds.finite()) {
        const bool log_scale = s.transform == Transform::Log;
        const double lo = log_scale ? std::log(s.bounds.lower) : s.bounds.lower;
        const double hi = log_scale ? std::log(s.bounds.upper) : s.bounds.upper;
        const double u = rng.uniform(lo + 1e-3 * (hi - lo), hi - 1e-3 * (hi - lo));
        x = log_scale ? std::exp(u) : u;
      } else if (s.transform == Transform::Log) {
        x = std::exp(rng.uniform(-10.0, 10.0));
      } else {
        x = rng.normal(0.0, 100.0);
      }
      const double back = to_natural(s, to_unconstrained(s, x));
      CHECK(std::abs(back - x) <= 1e-12 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST_CASE("natural values always land inside the bounds") {
  const ParamSpec logit{"p", ParamRole::Ode, {0.0, 1.0}, Transform::LogitBox};
  const ParamSpec logbox{"k", ParamRole::Diffusion, {1e-3, 1e3}, Transform::Log};
  for (double z : {-1e6, -50.0, 0.0, 50.0, 1e6}) {
    CHECK(logit.bounds.contains(to_natural(logit, z)));
    CHECK(logbox.bounds.contains(to_natural(logbox, z)));
  }
}

TEST_CASE("space validation") {
  ParamSpace space;
  space.add({"a", ParamRole::Ode, {0.0, 1.0}, Transform::LogitBox});
  CHECK_THROWS_AS(space.add({"a", ParamRole::Ode, {}, Transform::Identity}), InvalidArgument);
  CHECK_THROWS_AS(space.add({"b", ParamRole::Ode, {2.0, 1.0}, Transform::Identity}), InvalidArgument);
  CHECK_THROWS_AS(space.add({"c", ParamRole::Ode, {-1.0, 1.0}, Transform::Log}), InvalidArgument);
  CHECK_THROWS_AS(space.add({"s", ParamRole::Noise, {0.0, 1.0}, Transform::Identity}), InvalidArgument);
  space.add({"s", ParamRole::Noise, {1e-6, 1.0}, Transform::Log});
  CHECK(space.size() == 2);
  CHECK(space.index_of("s") == 1);
  CHECK(space.index_of("zz") == -1);
  CHECK(space.indices(ParamRole::Noise) == std::vector<int>{1});
}

TEST_CASE("clamp_inside moves boundary values strictly inside") {
  ParamSpace space;
  space.add({"a", ParamRole::Ode, {0.0, 1.0}, Transform::LogitBox});
  space.add({"b", ParamRole::Ode, {0.0, kInf}, Transform::Log});
  const Vector x = space.clamp_inside(Vector{{1.0, 0.0}});
  CHECK(x(0) < 1.0);
  CHECK(x(1) > 0.0);
  CHECK(space.contains(x));
  CHECK(std::isfinite(space.to_unconstrained(x).norm()));
}

}
