#include <doctest.h>

#include "fluidq/classic.hpp"
#include "support/quadrature.hpp"
#include "support/random_models.hpp"

using namespace fluidq;

namespace {

Mat scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

ClassicModel scalar_model(double tpp, double tpm, double tmp, double tmm, double t0mm,
                          double t0mp) {
  ClassicModel m;
  m.Tpp = scalar(tpp);
  m.Tpm = scalar(tpm);
  m.Tmp = scalar(tmp);
  m.Tmm = scalar(tmm);
  m.T0mm = scalar(t0mm);
  m.T0mp = scalar(t0mp);
  return m;
}

}  // namespace

TEST_CASE("scalar model: Psi, K and the boundary mass") {
  const ClassicModel m = scalar_model(-2, 2, 1, -1, -1, 1);
  const ClassicSolution sol = solve_classic(m);
  CHECK(sol.Psi(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sol.K(0, 0) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(sol.p_minus(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

  SUBCASE("faster drain shrinks the busy fraction") {
    const ClassicSolution s2 = solve_classic(scalar_model(-3, 3, 1, -1, -1, 1));
    CHECK(s2.Psi(0, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(s2.K(0, 0) == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK(s2.p_minus(0) == doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("scalar model densities and cdf") {
  const ClassicSolution sol = solve_classic(scalar_model(-2, 2, 1, -1, -1, 1));
  auto [up0, down0] = classic_density(sol, 1e-12);
  CHECK(up0(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(down0(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

  auto [up, down] = classic_density(sol, std::log(2.0));
  CHECK(up(0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(down(0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));

  CHECK(classic_level_cdf(sol, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(classic_level_cdf(sol, std::log(2.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(classic_level_cdf(sol, 60.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a sealed boundary keeps all mass at zero") {
  ClassicModel m = scalar_model(-2, 2, 1, -1, 0, 0);
  const ClassicSolution sol = solve_classic(m);
  CHECK(sol.p_minus(0) == doctest::Approx(1.0));
  CHECK(classic_level_cdf(sol, 0.0) == doctest::Approx(1.0));
  auto [up, down] = classic_density(sol, 0.5);
  CHECK(up.cwiseAbs().maxCoeff() == 0.0);
  CHECK(down.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unstable drift is rejected") {
  CHECK_THROWS_AS(solve_classic(scalar_model(-1, 1, 2, -2, -1, 1)), Unstable);
}

TEST_CASE("density structure and quadrature normalization on random models") {
  Rng rng(101, 0);
  for (int rep = 0; rep < 4; ++rep) {
    const ClassicModel m = testgen::random_stable_classic(rng, 1 + rep % 4, 2 + rep % 3);
    const ClassicSolution sol = solve_classic(m);

    // The down-block is always the up-block pushed through Psi.
    for (double x : {0.2, 1.0, 3.0}) {
      auto [up, down] = classic_density(sol, x);
      CHECK((down - up * sol.Psi).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(up.minCoeff() >= 0.0);
    }

    const double mass = oracle::integrate(
        [&](double x) {
          auto [up, down] = classic_density(sol, x);
          return up.sum() + down.sum();
        },
        0.0, 80.0, 1e-9);
    CHECK(sol.p_minus.sum() + mass == doctest::Approx(1.0).epsilon(1e-8));

    // CDF is nondecreasing with limit one.
    double prev = -1.0;
    for (double x : {0.0, 0.3, 1.0, 2.0, 5.0, 20.0, 80.0}) {
      const double v = classic_level_cdf(sol, x);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-8));
  }
}
