#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "oracles/mms_forcing.hpp"
#include "selfsim/potential.hpp"

using namespace selfsim;

namespace {

const Grid2D kSquare(-0.5, 0.5, -0.5, 0.5, 17, 17);

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST(Closure, Examples) {
  GasLaw g2(1.0, 2.0, 0.0);
  ScalarField phi(kSquare, -1.0);
  auto c = c2_of_phi(g2, phi, gradient(phi));
  EXPECT_EQ(max_abs_diff(c.c2, ScalarField(kSquare, 1.0)), 0.0);
  EXPECT_EQ(c.n_clamped, 0u);

  GasLaw iso(3.0, 1.0, 1.0);
  auto ci = c2_of_phi(iso, quiescent_profile(kSquare, 5.0), gradient(quiescent_profile(kSquare, 5.0)));
  EXPECT_EQ(max_abs_diff(ci.c2, ScalarField(kSquare, 9.0)), 0.0);

  for (double gamma : {-1.0, 0.5, 1.4, 3.0}) {
    GasLaw law(1.0, gamma, 1.0);
    const double K = gamma > 1 ? -1.0 : 1.0;
    auto q = quiescent_profile(kSquare, K);
    auto cq = c2_of_phi(law, q, gradient(q));
    EXPECT_LT(max_abs_diff(cq.c2, ScalarField(kSquare, -(gamma - 1) * K)), 1e-14) << gamma;
  }
}

TEST(ResidualQ, QuiescentExactForAllGamma) {
  for (double gamma : {-1.0, -0.5, 0.5, 1.0, 1.4, 2.0, 3.0}) {
    GasLaw law(1.0, gamma, 1.0);
    const double K = gamma > 1 ? -1.0 : 1.0;
    auto q = quiescent_profile(kSquare, K);
    EXPECT_LE(max_abs_interior(residual_Q(law, q, 0.0)), 1e-12) << gamma;
  }
  GasLaw g2(1.0, 2.0, 0.0);
  auto q = quiescent_profile(kSquare, -1.0);
  auto r = residual_Q(g2, q, 1e-2);
  for (int j = 1; j < 16; ++j)
    for (int i = 1; i < 16; ++i) EXPECT_NEAR(r(i, j), -0.02, 1e-13);
  ScalarField zero(kSquare);
  EXPECT_EQ(max_abs(residual_Q(g2, zero, 0.0)), 0.0);
  EXPECT_EQ(c2_of_phi(g2, zero, gradient(zero)).n_clamped, kSquare.size());
}

TEST(AssembleFrozen, LaplacianSpecialization) {
  GasLaw iso(1.0, 1.0, 1.0);
  ScalarField w(kSquare, 0.3);
  auto s = assemble_frozen(iso, w, 0.0);
  ScalarField delta(kSquare);
  delta(8, 8) = 1.0;
  auto out = apply_stencil(s.coef, delta);
  const double h2 = kSquare.hx() * kSquare.hx();
  EXPECT_DOUBLE_EQ(out(8, 8), -4.0 / h2);
  EXPECT_DOUBLE_EQ(out(9, 8), 1.0 / h2);
  EXPECT_DOUBLE_EQ(out(9, 9), 0.0);
}

TEST(AssembleFrozen, QuiescentCoefficientsAndCap) {
  GasLaw g2(1.0, 2.0, 0.0);
  auto q = quiescent_profile(kSquare, -1.0);
  auto s = assemble_frozen(g2, q, 0.01);
  for (int j = 0; j < 17; ++j)
    for (int i = 0; i < 17; ++i) {
      const double x = kSquare.x(i), y = kSquare.y(j);
      EXPECT_NEAR(s.coef.a11(i, j), 1.0 - x * x + 0.01, 1e-13);
      EXPECT_NEAR(s.coef.a22(i, j), 1.0 - y * y + 0.01, 1e-13);
      EXPECT_NEAR(s.coef.a11(i, j), s.coef.a22(j, i), 1e-13);
    }
  EXPECT_EQ(kind_of([&] { assemble_frozen(g2, q, 0.0, 1e-8, 0.5); }), ErrorKind::CapExceeded);
}

TEST(LinearDirichlet, QuiescentDiscreteIdentity) {
  GasLaw g2(1.0, 2.0, 0.0);
  auto q = quiescent_profile(kSquare, -1.0);
  auto s = assemble_frozen(g2, q, 0.0);
  auto sol = solve_linear_dirichlet(s, q);
  EXPECT_LT(max_abs_diff(sol, q), 1e-10);
}

TEST(Picard, QuiescentGamma2) {
  GasLaw g2(1.0, 2.0, 0.0);
  PotentialProblem p(g2, quiescent_profile(kSquare, -1.0));
  auto r = picard_solve(p, 1e-6, {}, p.phi_b);
  EXPECT_EQ(r.report.status, SolveStatus::Converged);
  EXPECT_LE(max_abs_diff(r.phi, p.phi_b), 5e-6);
  for (double m : r.report.min_ellipticity_history) EXPECT_GT(m, 0.0);
}

TEST(Picard, IsothermalQuiescent) {
  GasLaw iso(1.0, 1.0, 1.0);
  auto exact = quiescent_profile(kSquare, 0.0);
  // Start away from the solution: perturb interior values.
  ScalarField w0 = exact;
  for (int j = 0; j < 17; ++j)
    for (int i = 0; i < 17; ++i)
      w0(i, j) += 0.05 * std::cos(M_PI * kSquare.x(i)) * std::cos(M_PI * kSquare.y(j));
  PotentialProblem p(iso, exact);
  auto r = picard_solve(p, 0.0, {}, w0);
  EXPECT_EQ(r.report.status, SolveStatus::Converged);
  EXPECT_LE(r.report.residual, 1e-6);
  EXPECT_LT(max_abs_diff(r.phi, exact), 1e-9);
}

TEST(Picard, SupersonicDataNeverSilent) {
  GasLaw g2(1.0, 2.0, 0.0);
  PotentialProblem p(g2, sample(kSquare, [](double x, double) { return 10.0 * x; }));
  try {
    auto r = picard_solve(p, 0.0, {}, p.phi_b);
    EXPECT_NE(r.report.status, SolveStatus::Converged);
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::IndefiniteSystem || e.kind() == ErrorKind::NonConvergence);
  }
}

TEST(Picard, RejectsMismatchedFrame) {
  GasLaw g2(1.0, 2.0, 0.0);
  PotentialProblem p(g2, quiescent_profile(kSquare, -1.0));
  EXPECT_EQ(kind_of([&] { picard_solve(p, 0.0, {}, ScalarField(kSquare)); }), ErrorKind::Config);
}

TEST(Continuation, QuiescentAndSchedule) {
  GasLaw g2(1.0, 2.0, 0.0);
  PotentialProblem p(g2, quiescent_profile(kSquare, -1.0));
  auto r = epsilon_continuation(p, {}, {});
  EXPECT_EQ(r.report.status, SolveStatus::Converged);
  EXPECT_LE(max_abs_diff(r.phi, p.phi_b), 5e-6);
  EXPECT_NEAR(r.report.max_L2, 0.5, 1e-12);
  EXPECT_EQ(r.report.audit.verdict, AuditVerdict::Pass);
  EpsilonSchedule bad;
  bad.eps_min = 1.0;
  EXPECT_EQ(kind_of([&] { epsilon_continuation(p, bad, {}); }), ErrorKind::Config);
  EpsilonSchedule s;
  auto st = s.stages();
  EXPECT_EQ(st.front(), 0.1);
  EXPECT_EQ(st.back(), 1e-6);
}

TEST(Continuation, PerturbedDataAudit) {
  GasLaw g2(1.0, 2.0, 0.0);
  Grid2D g(-0.5, 0.5, -0.5, 0.5, 25, 25);
  auto phi_b = sample(g, [](double x, double y) {
    return -0.5 * (x * x + y * y) - 1.0 + 0.05 * std::sin(M_PI * x) * std::sin(M_PI * y);
  });
  PotentialProblem p(g2, phi_b);
  auto r = epsilon_continuation(p, {}, {});
  EXPECT_EQ(r.report.status, SolveStatus::Converged);
  EXPECT_EQ(r.report.audit.verdict, AuditVerdict::Pass);
  EXPECT_LT(r.report.max_L2, 1.0);
}

TEST(Manufactured, SecondOrderConvergence) {
  GasLaw g2(1.0, 2.0, 0.0);
  double prev = 0.0;
  for (int n : {17, 33}) {
    Grid2D g(-0.5, 0.5, -0.5, 0.5, n, n);
    PotentialProblem p(g2, sample(g, oracle::mms_phi));
    p.forcing = sample(g, [](double x, double y) { return oracle::mms_forcing(x, y, 2.0); });
    auto r = picard_solve(p, 0.0, {}, p.phi_b);
    ASSERT_EQ(r.report.status, SolveStatus::Converged);
    const double err = max_abs_diff_interior(r.phi, p.phi_b);
    if (prev > 0.0) {
      EXPECT_GE(prev / err, 3.4);
      EXPECT_LE(prev / err, 4.6);
    }
    prev = err;
  }
}
