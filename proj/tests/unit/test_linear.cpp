#include <gtest/gtest.h>

#include <cmath>

#include "selfsim/linear.hpp"

using namespace selfsim;

TEST(Stencil, LaplacianWeights) {
  Grid2D g(0, 1, 0, 1, 5, 5);
  auto c = laplace_coefficients(g);
  ScalarField delta(g);
  delta(2, 2) = 1.0;
  auto out = apply_stencil(c, delta);
  const double h2 = g.hx() * g.hx();
  EXPECT_DOUBLE_EQ(out(2, 2), -4.0 / h2);
  EXPECT_DOUBLE_EQ(out(1, 2), 1.0 / h2);
  EXPECT_DOUBLE_EQ(out(1, 1), 0.0);
}

TEST(Stencil, MatchesFieldCalculusOnPolynomials) {
  Grid2D g(-0.5, 0.5, -0.25, 0.75, 9, 11);
  StencilCoefficients c(g);
  c.a11 = sample(g, [](double x, double) { return 2.0 + x; });
  c.a12 = sample(g, [](double x, double y) { return 0.3 * x * y; });
  c.a22 = ScalarField(g, 1.5);
  c.b1 = sample(g, [](double, double y) { return y; });
  c.b2 = ScalarField(g, -0.7);
  c.c0 = ScalarField(g, 0.25);
  auto v = sample(g, [](double x, double y) { return x * x - 2 * x * y + 3 * y * y + x; });
  auto L = apply_stencil(c, v);
  auto H = hessian(v);
  auto G = gradient(v);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const double ref = c.a11(i, j) * H.f11(i, j) + c.a12(i, j) * H.f12(i, j) +
                         c.a22(i, j) * H.f22(i, j) + c.b1(i, j) * G.u(i, j) +
                         c.b2(i, j) * G.v(i, j) + c.c0(i, j) * v(i, j);
      EXPECT_NEAR(L(i, j), ref, 1e-11);
    }
}

TEST(Dirichlet, HarmonicAndZeroData) {
  Grid2D g(0, 1, 0, 1, 17, 17);
  auto c = laplace_coefficients(g);
  auto x = sample(g, [](double x, double) { return x; });
  auto sol = solve_dirichlet(c, ScalarField(g), x);
  EXPECT_LT(max_abs_diff(sol, x), 1e-13);
  auto zero = solve_dirichlet(c, ScalarField(g), ScalarField(g));
  EXPECT_EQ(max_abs(zero), 0.0);
}

TEST(Dirichlet, RecoversFieldFromItsOwnDiscreteImage) {
  Grid2D g(-0.5, 0.5, -0.5, 0.5, 33, 33);
  StencilCoefficients c(g);
  c.a11 = sample(g, [](double x, double) { return 1.0 - x * x; });
  c.a12 = sample(g, [](double x, double y) { return -2.0 * x * y; });
  c.a22 = sample(g, [](double, double y) { return 1.0 - y * y; });
  c.b1 = sample(g, [](double x, double) { return 2.0 * x; });
  c.b2 = sample(g, [](double, double y) { return 2.0 * y; });
  c.c0 = ScalarField(g, -2.0);
  auto phi = sample(g, [](double x, double y) {
    return -0.5 * (x * x + y * y) - 1.0 + 0.05 * std::sin(M_PI * x) * std::sin(M_PI * y);
  });
  LinearReport rep;
  auto sol = solve_dirichlet(c, apply_stencil(c, phi), phi, {}, &rep);
  EXPECT_LE(rep.rel_residual, 1e-11);
  EXPECT_LT(max_abs_diff(sol, phi), 1e-10);
}

TEST(Dirichlet, IndefiniteSystemRejected) {
  Grid2D g(0, 1, 0, 1, 9, 9);
  auto c = laplace_coefficients(g);
  c.a11(4, 4) = -1.0;
  try {
    solve_dirichlet(c, ScalarField(g), ScalarField(g));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IndefiniteSystem);
  }
}

TEST(Dirichlet, SolverReusesAnalysis) {
  Grid2D g(0, 1, 0, 1, 12, 10);
  DirichletSolver s;
  auto c = laplace_coefficients(g);
  auto b = sample(g, [](double x, double y) { return x * x - y * y; });
  auto first = s.solve(c, ScalarField(g), b);
  c.a11 = ScalarField(g, 2.0);
  c.a22 = ScalarField(g, 2.0);
  auto second = s.solve(c, ScalarField(g), b);
  EXPECT_LT(max_abs_diff(first, b), 1e-12);
  EXPECT_LT(max_abs_diff(second, b), 1e-12);
}
