#include <test_support.hpp>

#include <gtest/gtest.h>

using namespace allspeed;
using namespace allspeed::testing;

TEST(RelativeL2Error, ZeroForRestriction) {
  // A piecewise-constant reference restricted to the coarse grid exactly.
  const std::size_t mc = 10, mf = 40;
  Field rf(mf), qf(mf), rc(mc), qc(mc);
  for (std::size_t k = 0; k < mf; ++k) {
    rf[k] = 1.0 + static_cast<double>(k / 4);
    qf[k] = -1.0;
  }
  for (std::size_t j = 0; j < mc; ++j) {
    rc[j] = 1.0 + static_cast<double>(j);
    qc[j] = -1.0;
  }
  const FluidState1D coarse(Grid1D(0, 1, mc), rc, qc), fine(Grid1D(0, 1, mf), rf, qf);
  const auto e = relative_l2_error(coarse, fine);
  EXPECT_EQ(e.e_rho, 0.0);
  EXPECT_EQ(e.e_q, 0.0);
}

TEST(RelativeL2Error, LiteralAndRmsNormsDifferBySqrtRatio) {
  const std::size_t mc = 8, mf = 32;
  Field rf(mf, 2.0), rc(mc, 2.0);
  rc[3] = 2.5;
  const FluidState1D coarse(Grid1D(0, 1, mc), rc, Field(mc, 1.0));
  const FluidState1D fine(Grid1D(0, 1, mf), rf, Field(mf, 1.0));
  // Literal: (1/8) * 0.5 / ((1/32) * sqrt(32 * 4)).
  const double literal = (0.5 / 8.0) / (std::sqrt(32.0 * 4.0) / 32.0);
  EXPECT_NEAR(relative_l2_error(coarse, fine).e_rho, literal, 1e-15);
  EXPECT_NEAR(relative_l2_error(coarse, fine, ErrorNorm::Rms).e_rho, literal * std::sqrt(8.0 / 32.0), 1e-15);
}

TEST(RelativeL2Error, NearestFineCellTieGoesRight) {
  // Coarse centres at 0.25 and 0.75 lie on fine cell faces for an even factor.
  const FluidState1D fine(Grid1D(0, 1, 4), {1.0, 2.0, 3.0, 4.0}, Field(4, 0.0));
  const FluidState1D coarse(Grid1D(0, 1, 2), {2.0, 4.0}, Field(2, 0.0));
  EXPECT_EQ(relative_l2_error(coarse, fine).e_rho, 0.0);
}

TEST(RelativeL2Error, IncompatibleGrids) {
  const FluidState1D a(Grid1D(0, 1, 3), Field(3, 1.0), Field(3, 0.0));
  const FluidState1D b(Grid1D(0, 1, 10), Field(10, 1.0), Field(10, 0.0));
  const FluidState1D c(Grid1D(-1, 1, 9), Field(9, 1.0), Field(9, 0.0));
  EXPECT_THROW(relative_l2_error(a, b), IncompatibleGridsError);
  EXPECT_THROW(relative_l2_error(a, c), IncompatibleGridsError);
}

TEST(TotalVariation, PeriodicSum) {
  EXPECT_EQ(total_variation(Field{1.0, 3.0, 2.0}), 2.0 + 1.0 + 1.0);
  EXPECT_EQ(total_variation(Field(5, 7.0)), 0.0);
}

TEST(ConvergenceOrder, RatiosAndOrders) {
  const auto r = convergence_order({{0.1, 0.4}, {0.05, 0.2}, {0.025, 0.05}, {0.025, 0.04}});
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[0].ratio, 2.0, 1e-15);
  EXPECT_NEAR(r[0].order, 1.0, 1e-15);
  EXPECT_NEAR(r[1].order, 2.0, 1e-15);
  EXPECT_NEAR(r[2].ratio, 1.25, 1e-15);
  EXPECT_THROW(convergence_order({{0.1, 1.0}, {0.03, 0.5}}), InvalidStateError);
}

TEST(AlphaAdmissible, InfeasibleBelowQuarterEpsDx) {
  Rng rng(61);
  for (int t = 0; t < 1000; ++t) {
    const double dx = std::pow(10.0, uniform(rng, -4.0, -1.0));
    const double eps = std::pow(10.0, uniform(rng, -3.0, 0.0));
    const double dt = uniform(rng, 0.01, 1.0) * eps * dx / 4.0;
    const double sigma = uniform(rng, 0.01, 0.999);
    const double umax = uniform(rng, 0.0, 10.0);
    EXPECT_FALSE(alpha_admissible(dx, dt, eps, sigma, umax).feasible);
  }
}

TEST(AlphaAdmissible, Monotonicity) {
  Rng rng(67);
  for (int t = 0; t < 1000; ++t) {
    const double dx = std::pow(10.0, uniform(rng, -4.0, -1.0));
    const double eps = std::pow(10.0, uniform(rng, -3.0, 0.0));
    const double dt = std::pow(10.0, uniform(rng, -1.5, 0.5)) * dx;
    const double sigma = uniform(rng, 0.01, 0.999);
    const double umax = uniform(rng, 0.0, 5.0);
    const auto base = alpha_admissible(dx, dt, eps, sigma, umax);
    // Larger umax shrinks the interval from above; larger sigma widens it.
    const auto faster = alpha_admissible(dx, dt, eps, sigma, umax + 1.0);
    EXPECT_LE(faster.sqrt_alpha_hi, base.sqrt_alpha_hi);
    EXPECT_TRUE(base.feasible || !faster.feasible);
    const auto wider = alpha_admissible(dx, dt, eps, std::min(0.9999, sigma * 1.01), umax);
    EXPECT_TRUE(!base.feasible || wider.feasible);
    // Bounds fall as dt grows.
    const auto longer = alpha_admissible(dx, dt * 1.1, eps, sigma, umax);
    EXPECT_LE(longer.sqrt_alpha_lo, base.sqrt_alpha_lo);
    EXPECT_LE(longer.sqrt_alpha_hi, base.sqrt_alpha_hi);
  }
}

TEST(AlphaAdmissible, KnownFeasibleCase) {
  const auto r = alpha_admissible(0.01, 0.003, 0.8, 0.9, 1.1);
  EXPECT_NEAR(r.sqrt_alpha_lo, 0.01 / 0.006 - 1.25, 1e-12);
  EXPECT_NEAR(r.sqrt_alpha_hi, 3.0 - 1.1, 1e-12);
  EXPECT_TRUE(r.feasible);
  EXPECT_THROW(alpha_admissible(0.01, 0.003, 0.8, 1.0, 1.0), InvalidStateError);
  EXPECT_THROW(alpha_admissible(0.01, -1.0, 0.8, 0.5, 1.0), InvalidStateError);
}

TEST(Fluctuation, ScaledByEpsSquared) {
  const auto f = ap_fluctuation(Field{1.0, 1.01, 0.99, 1.0}, 0.1);
  EXPECT_NEAR(f.mean_rho, 1.0, 1e-15);
  EXPECT_NEAR(f.fluct_inf, 1.0, 1e-12);
  EXPECT_THROW(ap_fluctuation(Field{1.0}, 0.0), InvalidStateError);
}

TEST(Divergence, VanishesForShearFlow) {
  const Grid2D g(8, 8);
  Field q1(g.size()), q2(g.size(), 0.0);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) q1[i * 8 + j] = std::sin(2.0 * std::numbers::pi * g.y_center(j));
  const FluidState2D s(g, Field(g.size(), 1.0), q1, q2);
  EXPECT_LT(max_abs(discrete_divergence_2d(s)), 1e-14);
}

TEST(Divergence, CentredDifferenceOfLinearMode) {
  const Grid2D g(16, 16);
  Field q1(g.size()), q2(g.size(), 0.0);
  const double k = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) q1[i * 16 + j] = std::sin(k * g.x_center(i));
  const FluidState2D s(g, Field(g.size(), 1.0), q1, q2);
  const Field d = discrete_divergence_2d(s);
  const double factor = std::sin(k * g.dx()) / g.dx();
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(d[i * 16 + 3], factor * std::cos(k * g.x_center(i)), 1e-12);
}

TEST(RelativeEntropy, ZeroAtConstantAndPositiveOtherwise) {
  const EquationOfState eos(1.0, 2.0), iso(1.0, 1.0);
  EXPECT_NEAR(relative_entropy(eos, 0.1, Field(6, 1.5), Field(6, 0.3)), 0.0, 1e-14);
  Rng rng(71);
  const auto s = random_state_1d(rng, 32);
  EXPECT_GT(relative_entropy(eos, 0.5, s.rho(), s.q()), 0.0);
  EXPECT_GT(relative_entropy(iso, 0.5, s.rho(), s.q()), 0.0);
  // For p = rho^2 the potential part is (rho - mean)^2 / eps^2.
  const Field rho{1.0, 2.0};
  EXPECT_NEAR(relative_entropy(eos, 0.5, rho, Field(2, 0.0)), (0.25 + 0.25) / 2.0 / 0.25, 1e-14);
}
