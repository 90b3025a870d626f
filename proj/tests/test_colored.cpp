#include <doctest.h>

#include "fluidq/colored.hpp"
#include "support/density_eval.hpp"
#include "support/quadrature.hpp"
#include "support/random_models.hpp"

using namespace fluidq;
using detail::inf_norm;

namespace {

Mat scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return m;
}

// Scalar two-color model with hand-computed solution: Psi1 = Psi2 = 1,
// K1 = K2 = -2, bridge block 2, boundary mass 1/3, Gamma uniform on {0,1,2}.
ColoredModel two_color_scalar() {
  ColoredModel m;
  m.C = 2;
  m.n_minus = 1;
  m.n_plus = {0, 1, 1};
  m.Tmm = {Mat(), scalar(-1), scalar(0)};
  m.Tmp = {Mat(), scalar(0), scalar(0)};
  m.Tpp = {Mat(), scalar(-2), scalar(-2)};
  m.Tpm = {Mat(), scalar(1), scalar(2)};
  m.T0mm = scalar(-1);
  m.T0mp = {Mat(), scalar(1), scalar(0)};
  m.Tmp2.resize(2);
  m.Tpp2.resize(2);
  m.Tmp2.set(1, 2, scalar(1));
  m.Tpp2.set(1, 2, scalar(1));
  return m;
}

ColoredModel classic_as_colored(double tpp, double tpm, double tmp, double tmm, double t0mm,
                                double t0mp) {
  ColoredModel m;
  m.C = 1;
  m.n_minus = 1;
  m.n_plus = {0, 1};
  m.Tmm = {Mat(), scalar(tmm)};
  m.Tmp = {Mat(), scalar(tmp)};
  m.Tpp = {Mat(), scalar(tpp)};
  m.Tpm = {Mat(), scalar(tpm)};
  m.T0mm = scalar(t0mm);
  m.T0mp = {Mat(), scalar(t0mp)};
  m.Tmp2.resize(1);
  m.Tpp2.resize(1);
  return m;
}

// Residual of the per-color first-return equation with the censored blocks.
double backward_residual(const ColoredModel& m, const ColoredSolution& sol, int c) {
  Mat tpm = m.Tpm[c];
  for (const auto& [l, blk] : m.Tpp2.row(c)) tpm += blk * sol.Psi[l];
  Mat tmm = m.Tmm[c];
  for (const auto& [l, blk] : m.Tmp2.row(c)) tmm += blk * sol.Psi[l];
  const Mat& psi = sol.Psi[c];
  return inf_norm(m.Tpp[c] * psi + psi * m.Tmp[c] * psi + psi * tmm + tpm);
}

}  // namespace

TEST_CASE("validate flags structural violations with block names") {
  ColoredModel m = two_color_scalar();
  CHECK(validate(m).empty());

  SUBCASE("negative off-diagonal") {
    m.Tmm[1](0, 0) = -1.5;  // breaks the row sum, not the sign
    m.Tmp[1](0, 0) = -0.1;
    auto diags = validate(m);
    REQUIRE(!diags.empty());
    bool named = false;
    for (const auto& d : diags) named = named || d.block == "Tmp[1]";
    CHECK(named);
  }
  SUBCASE("row sum violation carries the offending sum") {
    m.Tpm[2](0, 0) += 0.01;
    auto diags = validate(m);
    REQUIRE(!diags.empty());
    CHECK(diags.front().block == "Tpp[2]");
    CHECK(diags.front().value == doctest::Approx(0.01));
  }
}

TEST_CASE("one color reduces to the classic queue") {
  const ColoredModel cm = classic_as_colored(-2, 2, 1, -1, -1, 1);
  const ColoredSolution sol = solve_colored(cm);
  REQUIRE(sol.recurrent);
  CHECK(sol.Psi[1](0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sol.Kc[1](0, 0) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(sol.p_minus(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));

  ClassicModel classic;
  classic.Tpp = scalar(-2);
  classic.Tpm = scalar(2);
  classic.Tmp = scalar(1);
  classic.Tmm = scalar(-1);
  classic.T0mm = scalar(-1);
  classic.T0mp = scalar(1);
  const ClassicSolution ref = solve_classic(classic);
  CHECK(std::abs(sol.Psi[1](0, 0) - ref.Psi(0, 0)) < 1e-12);
  CHECK(std::abs(sol.p_minus(0) - ref.p_minus(0)) < 1e-12);
  for (double x : {0.0, 0.7, 2.0})
    CHECK(level_cdf(sol, x) == doctest::Approx(classic_level_cdf(ref, x)).epsilon(1e-12));

  const auto gamma = top_color_dist(sol);
  CHECK(gamma[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(gamma[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  // The single-color density is exactly the classic one.
  for (double x : {0.2, 0.9, 2.5}) {
    auto [up, down] = density(sol, cm, {x});
    auto [up_ref, down_ref] = classic_density(ref, x);
    CHECK((up - up_ref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((down - down_ref).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("two-color scalar model solves to the hand-derived values") {
  const ColoredModel m = two_color_scalar();
  const ColoredSolution sol = solve_colored(m);
  REQUIRE(sol.recurrent);
  CHECK(sol.Psi[1](0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sol.Psi[2](0, 0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(sol.Kc[1](0, 0) == doctest::Approx(-2.0).epsilon(1e-13));
  CHECK(sol.Kc[2](0, 0) == doctest::Approx(-2.0).epsilon(1e-13));
  CHECK(sol.p_minus(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(backward_residual(m, sol, 1) <= 1e-12);
  CHECK(backward_residual(m, sol, 2) <= 1e-12);

  const Mat k = sol.kbig();
  CHECK(k(0, 1) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(k(1, 0) == 0.0);

  SUBCASE("gamma is uniform and both routes agree") {
    const auto g = top_color_dist(m.C == 2 ? sol : sol);
    for (int c = 0; c <= 2; ++c) CHECK(g[c] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    const auto general = top_color_dist_general(sol);
    const auto recursive = top_color_dist_recursive(sol);
    for (int c = 0; c <= 2; ++c) CHECK(std::abs(general[c] - recursive[c]) < 1e-12);
  }

  SUBCASE("density at a two-positive point") {
    auto [up, down] = density(sol, m, {0.3, 0.4});
    const double expected = (2.0 / 3.0) * std::exp(-2.0 * 0.3) * std::exp(-2.0 * 0.4);
    CHECK(up(0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(down(0) == doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("cdf closed form") {
    // P[level <= z] = 1/3 + (2/3)(1 - e^{-2z}(1+z)).
    CHECK(level_cdf(sol, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(level_cdf(sol, 1.0) == doctest::Approx(0.8195529556845164).epsilon(1e-12));
    CHECK(level_cdf(sol, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("zero amounts are rejected, negative amounts are rejected") {
    CHECK_THROWS_AS(density(sol, m, {0.0, 0.0}), InvalidPoint);
    CHECK_THROWS_AS(density(sol, m, {-0.1, 0.2}), InvalidPoint);
  }

  SUBCASE("quadrature normalization") {
    const double axis = oracle::integrate(
        [&](double x) {
          auto [up, down] = density(sol, m, {x, 0.0});
          return up.sum() + down.sum();
        },
        1e-12, 40.0, 1e-10);
    const double interior = oracle::integrate(
        [&](double x) {
          return oracle::integrate(
              [&](double y) {
                auto [up, down] = density(sol, m, {x, y});
                return up.sum() + down.sum();
              },
              1e-12, 40.0, 1e-10);
        },
        1e-12, 40.0, 1e-8);
    CHECK(sol.p_minus.sum() + axis + interior == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("an unreachable color carries no stationary mass") {
  ColoredModel m = two_color_scalar();
  // Cut every road into color 2 and rebalance the diagonals.
  m.Tpp2 = ColorBlockTable(2);
  m.Tmp2 = ColorBlockTable(2);
  m.Tpm[1] = scalar(2);   // absorbs the removed Tpp2 rate
  m.Tmm[1] = scalar(0);   // row [Tmp|Tmm|-] must still sum to zero
  m.Tmm[2] = scalar(0);
  REQUIRE(validate(m).empty());
  const ColoredSolution sol = solve_colored(m);
  REQUIRE(sol.recurrent);
  const auto g = top_color_dist(sol);
  CHECK(g[2] == doctest::Approx(0.0));
  CHECK(g[0] + g[1] == doctest::Approx(1.0).epsilon(1e-12));
  auto [up, down] = density(sol, m, {0.5, 0.5});
  CHECK(up.cwiseAbs().maxCoeff() == 0.0);
  CHECK(down.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random recurrent models satisfy the backward-recursion invariants") {
  Rng rng(211, 0);
  for (int rep = 0; rep < 6; ++rep) {
    testgen::ColoredShape shape;
    shape.C = 2 + static_cast<int>(rng.next() % 2);
    shape.n_minus = 2 + static_cast<Eigen::Index>(rng.next() % 2);
    shape.n_plus = {0};
    for (int c = 1; c <= shape.C; ++c)
      shape.n_plus.push_back(1 + static_cast<Eigen::Index>(rng.next() % 3));
    const ColoredModel m = testgen::random_recurrent_colored(rng, shape);
    const ColoredSolution sol = solve_colored(m);
    REQUIRE(sol.recurrent);

    for (int c = 1; c <= sol.C; ++c) {
      CHECK(backward_residual(m, sol, c) <= 1e-12);
      CHECK((sol.Psi[c] * ones(sol.n_minus)).maxCoeff() <= 1.0 + 1e-10);
      CHECK((sol.Psi[c] * ones(sol.n_minus)).minCoeff() >= 1.0 - 1e-10);
      CHECK(check_generator(sol.Kc[c], 1e-9).is_subgenerator);
    }
    CHECK(check_generator(sol.kbig(), 1e-9).is_subgenerator);

    const auto gamma = top_color_dist(sol);
    double total = 0.0;
    for (double p : gamma) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

    double prev = -1.0;
    for (double x : {0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 30.0}) {
      const double v = level_cdf(sol, x);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-7));

    // Density structure: the down block is the up block through Psi of the
    // top positive color.
    std::vector<double> xs(sol.C, 0.0);
    xs[0] = 0.4;
    xs[sol.C - 1] = 0.9;
    auto [up, down] = density(sol, m, xs);
    CHECK((down - up * sol.Psi[sol.C]).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("the no-skip recursion matches the dense route") {
  Rng rng(223, 0);
  for (int rep = 0; rep < 4; ++rep) {
    testgen::ColoredShape shape;
    shape.C = 3;
    shape.n_minus = 2;
    shape.n_plus = {0, 2, 1, 2};
    shape.no_skip = true;
    const ColoredModel m = testgen::random_recurrent_colored(rng, shape);
    const ColoredSolution sol = solve_colored(m);
    const auto general = top_color_dist_general(sol);
    const auto recursive = top_color_dist_recursive(sol);
    for (int c = 0; c <= 3; ++c) CHECK(std::abs(general[c] - recursive[c]) < 1e-10);
  }
}

TEST_CASE("the Sylvester fast path agrees with the general Riccati route") {
  Rng rng(227, 0);
  for (int rep = 0; rep < 4; ++rep) {
    testgen::ColoredShape shape;
    shape.C = 3;
    shape.n_minus = 2;
    shape.n_plus = {0, 2, 2, 1};
    shape.zero_tmp_below_top = true;
    const ColoredModel m = testgen::random_recurrent_colored(rng, shape);
    SolverOptions fast, slow;
    slow.use_sylvester_fast_path = false;
    const ColoredSolution a = solve_colored(m, fast);
    const ColoredSolution b = solve_colored(m, slow);
    for (int c = 1; c <= 3; ++c)
      CHECK((a.Psi[c] - b.Psi[c]).cwiseAbs().maxCoeff() < 1e-10);
    // Below the top color the decay matrix is the up/up block itself.
    for (int c = 1; c < 3; ++c)
      CHECK((a.Kc[c] - m.Tpp[c]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("non-recurrent models are flagged and keep their diagnostics") {
  ColoredModel m = classic_as_colored(-1, 1, 2, -2, -1, 1);  // upward drift
  const ColoredSolution sol = solve_colored(m);
  CHECK_FALSE(sol.recurrent);
  CHECK(sol.drifts[1].first > sol.drifts[1].second);
  CHECK(sol.Psi[1](0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sol.p_minus.size() == 0);
  CHECK_THROWS_AS(level_cdf(sol, 1.0), NotRecurrent);
  CHECK_THROWS_AS(top_color_dist(sol), NotRecurrent);
}

TEST_CASE("reduce_to_classic") {
  SUBCASE("one color is the identity transformation") {
    const ColoredModel cm = classic_as_colored(-2, 2, 1, -1, -1, 1);
    const ClassicModel classic = reduce_to_classic(cm);
    CHECK(classic.Tpp(0, 0) == -2.0);
    CHECK(classic.Tmp(0, 0) == 1.0);
    CHECK(classic.T0mp(0, 0) == 1.0);
  }

  SUBCASE("stacked solution matches the colored recursion") {
    Rng rng(229, 0);
    testgen::ColoredShape shape;
    shape.C = 3;
    shape.n_minus = 2;
    shape.n_plus = {0, 2, 1, 2};
    shape.appendix_a = true;
    const ColoredModel m = testgen::random_recurrent_colored(rng, shape);
    const ClassicModel classic = reduce_to_classic(m);
    const ClassicSolution ref = solve_classic(classic);
    const ColoredSolution sol = solve_colored(m);
    Eigen::Index off = 0;
    for (int c = 1; c <= 3; ++c) {
      CHECK((ref.Psi.middleRows(off, m.n_plus[c]) - sol.Psi[c]).cwiseAbs().maxCoeff() < 1e-10);
      off += m.n_plus[c];
    }
    CHECK((ref.p_minus - sol.p_minus).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("violated hypotheses are named") {
    Rng rng(233, 0);
    testgen::ColoredShape shape;
    shape.C = 2;
    shape.n_minus = 2;
    shape.n_plus = {0, 1, 1};
    shape.appendix_a = true;
    ColoredModel m = testgen::random_colored(rng, shape);
    m.Tmm[1](0, 1) += 0.2;
    m.Tmm[1](0, 0) -= 0.2;
    CHECK_THROWS_WITH_AS(reduce_to_classic(m), doctest::Contains("Tmm"), HypothesisViolated);
  }
}

TEST_CASE("stationary balance residuals of a two-color model") {
  Rng rng(239, 0);
  testgen::ColoredShape shape;
  shape.C = 2;
  shape.n_minus = 2;
  shape.n_plus = {0, 2, 2};
  const ColoredModel m = testgen::random_recurrent_colored(rng, shape);
  const ColoredSolution sol = solve_colored(m);

  const PdeResiduals r = pde_residual(sol, m, 0.5, 0.5, 1e-4);
  CHECK(r.max_interior() <= 1e-6);
  CHECK(r.max_boundary() <= 1e-10);

  // Negative control: a perturbed first-return matrix must break the balance
  // somewhere on the grid.
  ColoredSolution bad = sol;
  bad.Psi[2].array() += 0.05;
  double control = 0.0;
  for (double x : {0.3, 0.6, 0.9})
    for (double y : {0.3, 0.6, 0.9}) {
      const PdeResiduals rb = pde_residual(bad, m, x, y, 1e-4);
      control = std::max(control, std::max(rb.max_interior(), rb.max_boundary()));
    }
  CHECK(control > 1e-3);

  CHECK_THROWS_AS(pde_residual(sol, m, 0.5, 0.5, 0.6), InvalidPoint);
}

TEST_CASE("an empty color block is legal") {
  ColoredModel m = two_color_scalar();
  m.n_plus[2] = 0;
  m.Tpp[2] = Mat(0, 0);
  m.Tpm[2] = Mat(0, 1);
  m.Tmp[2] = Mat(1, 0);
  m.Tmm[2] = scalar(0);
  m.T0mp[2] = Mat(1, 0);
  m.Tmp2 = ColorBlockTable(2);
  m.Tpp2 = ColorBlockTable(2);
  m.Tpm[1] = scalar(2);  // rebalance after dropping the color-change blocks
  m.Tmm[1] = scalar(0);
  REQUIRE(validate(m).empty());
  const ColoredSolution sol = solve_colored(m);
  REQUIRE(sol.recurrent);
  CHECK(sol.Psi[2].rows() == 0);
  const auto g = top_color_dist(sol);
  CHECK(g[2] == 0.0);
  CHECK(g[0] + g[1] == doctest::Approx(1.0).epsilon(1e-12));
}
