#pragma once

/// @file quasipotential.hpp
/// @brief First-order perturbation of potential flow, U = grad psi + delta perp_grad zeta.
///
/// The truncated system is
///
///   c0^2 Delta psi - (D^2 psi) grad psi . grad psi - |grad psi|^2 + 2 c0^2
///       = delta ((2 + Delta psi) Q1 + N1),
///   div(Delta zeta grad psi) + Delta zeta = 0,
///
/// with c^2 = c0^2 - delta Q1, Q1 = (gamma - 1)(F1 + grad psi . perp_grad zeta) and
/// grad F1 = Delta zeta perp_grad psi + perp_grad zeta. The solver tracks the
/// unscaled zeta (written zeta~ below) and applies delta where U is assembled.
///
/// In the potential operator the psi equation reads Q psi with c^2 replaced by
/// c0^2 - delta Q1 in the principal part and right-hand side delta (2 Q1 + N1).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/gas.hpp"
#include "selfsim/hodge.hpp"
#include "selfsim/linear.hpp"
#include "selfsim/potential.hpp"
#include "selfsim/regime.hpp"
#include "selfsim/vorticity.hpp"

namespace selfsim {

/// N1 = (D perp_grad zeta) grad psi . grad psi + 2 (D^2 psi) grad psi . perp_grad zeta
///      + 2 grad psi . perp_grad zeta
inline ScalarField compute_N1(const ScalarField& psi, const ScalarField& zeta) {
  require_same_grid(psi.grid(), zeta.grid(), "compute_N1");
  const VectorField G = gradient(psi);
  const Hessian H = hessian(psi);
  const VectorField P = perp_gradient(zeta);
  const Jacobian J = jacobian(P);
  ScalarField n = jacobian_form(J, G, G);
  n += hessian_form(H, G, P) * 2.0;
  n += dot(G, P) * 2.0;
  return n;
}

struct F1Reconstruction {
  ScalarField F1;
  /// max interior |d1 V^2 - d2 V^1| of V = Delta zeta perp_grad psi + perp_grad zeta.
  double curl_defect = 0.0;
};

/// F1 with F1(anchor) = 0. With a threshold, a larger curl defect raises NonIntegrable.
inline F1Reconstruction reconstruct_F1(const ScalarField& psi, const ScalarField& zeta,
                                       NodeIndex anchor = {0, 0},
                                       std::optional<double> strict_threshold = std::nullopt) {
  require_same_grid(psi.grid(), zeta.grid(), "reconstruct_F1");
  const VectorField V = scale(laplacian(zeta), perp_gradient(psi)) + perp_gradient(zeta);
  F1Reconstruction r;
  r.curl_defect = integrability_residual(V.u, V.v);
  if (strict_threshold && !(r.curl_defect <= *strict_threshold)) {
    std::ostringstream os;
    os << "grad F1 has curl defect " << r.curl_defect << " above " << *strict_threshold;
    fail(ErrorKind::NonIntegrable, os.str());
  }
  r.F1 = reconstruct_F(V.u, V.v, 0.0, anchor);
  return r;
}

/// Q1 = (gamma - 1)(F1 + grad psi . perp_grad zeta); zero for gamma = 1.
inline ScalarField compute_Q1(const GasLaw& law, const ScalarField& psi, const ScalarField& zeta,
                              const ScalarField& F1) {
  require_same_grid(psi.grid(), zeta.grid(), "compute_Q1");
  require_same_grid(psi.grid(), F1.grid(), "compute_Q1");
  if (law.isothermal()) return ScalarField(psi.grid());
  ScalarField q = F1 + dot(gradient(psi), perp_gradient(zeta));
  q *= law.gamma() - 1.0;
  return q;
}

/// c^2 = c0^2(psi) - delta Q1, clamped at c2_floor; a^2 for gamma = 1.
inline C2Field c2_quasi(const GasLaw& law, const ScalarField& psi, const ScalarField& zeta, double delta,
                        const ScalarField& F1, double c2_floor = 1e-8) {
  ScalarField shift = compute_Q1(law, psi, zeta, F1);
  shift *= -delta;
  return c2_of_phi(law, psi, gradient(psi), c2_floor, &shift);
}

// ---------------------------------------------------------------------------
// Linearization at delta = 0

/// F(0, psi) = c0^2 Delta psi - (D^2 psi) grad psi . grad psi - |grad psi|^2 + 2 c0^2
/// at interior nodes with the unclamped closure.
inline ScalarField potential_map(const GasLaw& law, const ScalarField& psi) {
  const Grid2D& g = psi.grid();
  const VectorField G = gradient(psi);
  const Hessian H = hessian(psi);
  ScalarField r(g);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const std::size_t k = g.index(i, j);
      const double p1 = G.u[k], p2 = G.v[k];
      const double c2 = c2_raw(law, psi[k], p1, p2);
      r[k] = c2 * (H.f11[k] + H.f22[k]) - (H.f11[k] * p1 * p1 + 2.0 * H.f12[k] * p1 * p2 + H.f22[k] * p2 * p2) -
             (p1 * p1 + p2 * p2) + 2.0 * c2;
    }
  return r;
}

/// Stencil form of the derivative of potential_map at psi0:
///   a = c0^2 I - grad psi0 (x) grad psi0 (a12 holds the doubled off-diagonal),
///   b = -2 (D^2 psi0) grad psi0 - [(gamma - 1)(2 + Delta psi0) + 2] grad psi0,
///   c = -(gamma - 1)(2 + Delta psi0).
inline StencilCoefficients linearized_coefficients(const GasLaw& law, const ScalarField& psi0) {
  const Grid2D& g = psi0.grid();
  const VectorField G = gradient(psi0);
  const Hessian H = hessian(psi0);
  const double gm1 = law.isothermal() ? 0.0 : law.gamma() - 1.0;
  StencilCoefficients c(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double p1 = G.u[k], p2 = G.v[k];
    const double c2 = c2_raw(law, psi0[k], p1, p2);
    const double lap = H.f11[k] + H.f22[k];
    const double m = gm1 * (2.0 + lap);
    c.a11[k] = c2 - p1 * p1;
    c.a12[k] = -2.0 * p1 * p2;
    c.a22[k] = c2 - p2 * p2;
    c.b1[k] = -2.0 * (H.f11[k] * p1 + H.f12[k] * p2) - (m + 2.0) * p1;
    c.b2[k] = -2.0 * (H.f12[k] * p1 + H.f22[k] * p2) - (m + 2.0) * p2;
    c.c0[k] = -m;
  }
  return c;
}

/// L^psi0[v] at interior nodes, with every derivative taken by the field operators.
inline ScalarField linearized_L(const ScalarField& psi0, const ScalarField& v, const GasLaw& law) {
  require_same_grid(psi0.grid(), v.grid(), "linearized_L");
  const Grid2D& g = psi0.grid();
  const StencilCoefficients c = linearized_coefficients(law, psi0);
  const VectorField Gv = gradient(v);
  const Hessian Hv = hessian(v);
  ScalarField r(g);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const std::size_t k = g.index(i, j);
      r[k] = c.a11[k] * Hv.f11[k] + c.a12[k] * Hv.f12[k] + c.a22[k] * Hv.f22[k] + c.b1[k] * Gv.u[k] +
             c.b2[k] * Gv.v[k] + c.c0[k] * v[k];
    }
  return r;
}

struct GateauxRow {
  double tau;
  double defect;
};

struct GateauxTable {
  std::vector<GateauxRow> rows;
  /// Least-squares slope of log defect against log tau (NaN with fewer than
  /// two positive defects).
  double slope = std::numeric_limits<double>::quiet_NaN();
};

inline GateauxTable gateaux_check(const ScalarField& psi0, const ScalarField& v, const GasLaw& law,
                                  const std::vector<double>& taus) {
  require_same_grid(psi0.grid(), v.grid(), "gateaux_check");
  if (taus.empty()) fail(ErrorKind::Config, "gateaux_check needs at least one tau");
  for (std::size_t n = 0; n < taus.size(); ++n) {
    if (!(taus[n] > 0.0)) fail(ErrorKind::Config, "tau values must be > 0");
    if (n > 0 && !(taus[n] < taus[n - 1])) fail(ErrorKind::Config, "tau values must decrease");
  }
  const ScalarField F0 = potential_map(law, psi0);
  const ScalarField Lv = linearized_L(psi0, v, law);
  GateauxTable t;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (double tau : taus) {
    ScalarField p = v * tau;
    p += psi0;
    ScalarField q = potential_map(law, p) - F0;
    q *= 1.0 / tau;
    const double d = max_abs_interior(q - Lv);
    t.rows.push_back({tau, d});
    if (d > 0.0) {
      const double x = std::log(tau), y = std::log(d);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      ++m;
    }
  }
  if (m >= 2) t.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return t;
}

// ---------------------------------------------------------------------------
// Full rotational diagnostics

struct RotationalResidual {
  ScalarField r1, r2;
  ScalarField F;
  ScalarField c2;
  double curl_defect = 0.0;
};

/// Residuals of the untruncated system with U = grad psi + perp_grad zeta:
///   r1 = c^2 Delta psi - (D^2 psi) grad psi . grad psi - |grad psi|^2 + 2 c^2 - N1 - N2 - N3
///   r2 = Delta zeta (Delta psi + 1) + U . grad(Delta zeta)
/// with c^2 = (gamma - 1)(F - psi - |grad psi|^2 / 2 - grad psi . perp_grad zeta - |grad zeta|^2 / 2)
/// and grad F = -Delta zeta (perp_grad psi - grad zeta) - perp_grad zeta, F(anchor) = 0.
inline RotationalResidual full_rotational_residual(const ScalarField& psi, const ScalarField& zeta,
                                                   const GasLaw& law, NodeIndex anchor = {0, 0},
                                                   std::optional<double> strict_threshold = std::nullopt) {
  require_same_grid(psi.grid(), zeta.grid(), "full_rotational_residual");
  const Grid2D& g = psi.grid();
  const VectorField Gp = gradient(psi);
  const Hessian Hp = hessian(psi);
  const VectorField Gz = gradient(zeta);
  const VectorField P = perp_gradient(zeta);
  const Jacobian JP = jacobian(P);
  const ScalarField w = laplacian(zeta);
  const ScalarField lap_psi = laplacian(psi);

  RotationalResidual out;
  VectorField gradF = scale(w, Gz - perp_gradient(psi)) - P;
  out.curl_defect = integrability_residual(gradF.u, gradF.v);
  if (strict_threshold && !(out.curl_defect <= *strict_threshold)) {
    std::ostringstream os;
    os << "grad F has curl defect " << out.curl_defect << " above " << *strict_threshold;
    fail(ErrorKind::NonIntegrable, os.str());
  }
  out.F = reconstruct_F(gradF.u, gradF.v, 0.0, anchor);

  out.c2 = ScalarField(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (law.isothermal()) {
      out.c2[k] = law.a() * law.a();
    } else {
      out.c2[k] = (law.gamma() - 1.0) *
                  (out.F[k] - psi[k] - 0.5 * (Gp.u[k] * Gp.u[k] + Gp.v[k] * Gp.v[k]) -
                   (Gp.u[k] * P.u[k] + Gp.v[k] * P.v[k]) - 0.5 * (Gz.u[k] * Gz.u[k] + Gz.v[k] * Gz.v[k]));
    }
  }

  const ScalarField N1 = compute_N1(psi, zeta);
  ScalarField N2 = hessian_form(Hp, P, P) + jacobian_form(JP, Gp, P) + jacobian_form(JP, P, Gp) + norm_sq(Gz);
  const ScalarField N3 = jacobian_form(JP, P, P);
  const VectorField Gw = gradient(w);

  out.r1 = ScalarField(g);
  out.r2 = ScalarField(g);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const std::size_t k = g.index(i, j);
      const double p1 = Gp.u[k], p2 = Gp.v[k], c2 = out.c2[k];
      out.r1[k] = c2 * lap_psi[k] -
                  (Hp.f11[k] * p1 * p1 + 2.0 * Hp.f12[k] * p1 * p2 + Hp.f22[k] * p2 * p2) -
                  (p1 * p1 + p2 * p2) + 2.0 * c2 - N1[k] - N2[k] - N3[k];
      out.r2[k] = w[k] * (lap_psi[k] + 1.0) + (p1 + P.u[k]) * Gw.u[k] + (p2 + P.v[k]) * Gw.v[k];
    }
  return out;
}

// ---------------------------------------------------------------------------
// Coupled solver

struct QuasiConfig {
  /// Ascending, each in [0, 1).
  std::vector<double> delta_targets{0.0};
  /// Sup-norm change of (psi, delta zeta~) that ends the outer loop.
  double outer_tol = 1e-8;
  int outer_max_iters = 50;
  /// One Newton correction with the linearized operator per outer step instead
  /// of a Picard solve.
  bool newton = false;
  /// zeta~_b on every node (frame values are Dirichlet data, Delta zeta~_b on the
  /// inflow frame feeds the transport). Zero when absent.
  std::optional<ScalarField> zeta_b;
  /// A stage fails once max L^2 >= 1 - sonic_margin.
  double sonic_margin = 1e-3;
  /// Curl-defect threshold for NonIntegrable, enforced only when strict.
  double curl_tol = 1e-3;
  bool strict = false;
  TransportParams transport;
  NodeIndex anchor{0, 0};

  void validate() const {
    if (delta_targets.empty()) fail(ErrorKind::Config, "quasi.delta_targets must not be empty");
    for (std::size_t n = 0; n < delta_targets.size(); ++n) {
      const double d = delta_targets[n];
      if (!(d >= 0.0 && d < 1.0)) fail(ErrorKind::Config, "quasi.delta_targets must lie in [0, 1)");
      if (n > 0 && !(d > delta_targets[n - 1])) {
        fail(ErrorKind::Config, "quasi.delta_targets must be strictly ascending");
      }
    }
    if (!(outer_tol > 0.0)) fail(ErrorKind::Config, "quasi.outer_tol must be > 0");
    if (outer_max_iters < 1) fail(ErrorKind::Config, "quasi.outer_max_iters must be >= 1");
    if (!(sonic_margin >= 0.0 && sonic_margin < 1.0)) fail(ErrorKind::Config, "sonic_margin must lie in [0, 1)");
    if (!(curl_tol > 0.0)) fail(ErrorKind::Config, "curl_tol must be > 0");
  }
};

struct QuasiState {
  double delta = 0.0;
  ScalarField psi;
  /// delta zeta~, so that U = grad psi + perp_grad zeta.
  ScalarField zeta;
  ScalarField zeta_tilde;
  /// Delta zeta~ from the transport step.
  ScalarField omega_tilde;
  ScalarField F1, Q1, N1;
  ScalarField c2;
  ScalarField L2;
};

struct QuasiStageReport {
  double delta = 0.0;
  SolveStatus status = SolveStatus::NonConvergence;
  int outer_iterations = 0;
  std::vector<double> change_history;
  int inner_iterations = 0;
  double curl_defect = 0.0;
  std::size_t uncovered = 0;
  std::size_t clamped = 0;
  double max_L2 = 0.0;
  /// max |psi - phi| against the potential solution.
  double psi_shift = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  std::string error;
};

struct QuasiReport {
  SolveStatus status = SolveStatus::Failed;
  SolveReport base;
  double eps = 0.0;
  std::vector<QuasiStageReport> stages;
  std::string error;
};

struct QuasiResult {
  /// Potential solution the continuation starts from.
  ScalarField phi;
  /// One state per converged stage, in delta order.
  std::vector<QuasiState> states;
  QuasiReport report;
};

namespace detail {

inline ScalarField newton_correction(const PotentialProblem& p, const ScalarField& psi, double eps,
                                     DirichletSolver& solver) {
  StencilCoefficients c = linearized_coefficients(p.law, psi);
  for (std::size_t k = 0; k < c.a11.size(); ++k) {
    const double s = (p.c2_shift ? (*p.c2_shift)[k] : 0.0) + eps;
    c.a11[k] += s;
    c.a22[k] += s;
  }
  ScalarField rhs = residual_Q(p, psi, eps);
  rhs *= -1.0;
  const ScalarField v = solver.solve(c, rhs, ScalarField(psi.grid()));
  return psi + v;
}

}  // namespace detail

/// delta continuation of the truncated system, starting from the
/// epsilon-continuation solution of `base`. Each stage runs block Gauss-Seidel:
/// transport omega~ along grad psi, solve Delta zeta~ = omega~ with zeta~ = zeta~_b
/// on the frame, rebuild F1, Q1, N1, then update psi at the final epsilon of the
/// base solve.
inline QuasiResult solve_quasi(const QuasiConfig& config, const PotentialProblem& base,
                               const EpsilonSchedule& schedule, const PicardParams& params) {
  config.validate();
  base.validate();
  const Grid2D& g = base.grid;
  const ScalarField zb = config.zeta_b ? *config.zeta_b : ScalarField(g);
  require_same_grid(g, zb.grid(), "quasi.zeta_b");
  const ScalarField omega_b = laplacian(zb);
  const std::optional<double> curl_limit =
      config.strict ? std::optional<double>(config.curl_tol) : std::nullopt;

  QuasiResult out;
  QuasiReport& rep = out.report;
  ContinuationResult cont = epsilon_continuation(base, schedule, params);
  rep.base = cont.report;
  out.phi = cont.phi;
  if (cont.report.status != SolveStatus::Converged) {
    rep.status = SolveStatus::Failed;
    rep.error = "potential solve did not converge: " + cont.report.error;
    return out;
  }
  rep.eps = cont.report.final_eps;

  DirichletSolver solver(params.linear(g));
  DirichletSolver poisson(params.linear(g));
  ScalarField psi = out.phi;
  ScalarField zt = zb;
  bool failed = false;

  for (double delta : config.delta_targets) {
    QuasiStageReport st;
    st.delta = delta;
    QuasiState s;
    s.delta = delta;
    ScalarField psi_k = psi, zt_k = zt;
    bool converged = false;
    try {
      for (int it = 1; it <= config.outer_max_iters; ++it) {
        InflowSet inflow = inflow_boundary(psi_k);
        assign_inflow_values(inflow, omega_b);
        const TransportResult tr = transport_omega(psi_k, inflow, config.transport);
        st.uncovered = tr.uncovered;
        ScalarField zt_new = poisson.solve(laplace_coefficients(g), tr.omega, zb);
        const F1Reconstruction f1 = reconstruct_F1(psi_k, zt_new, config.anchor, curl_limit);
        st.curl_defect = f1.curl_defect;
        ScalarField Q1 = compute_Q1(base.law, psi_k, zt_new, f1.F1);
        ScalarField N1 = compute_N1(psi_k, zt_new);

        PotentialProblem p = base;
        ScalarField shift = Q1 * (-delta);
        if (base.c2_shift) shift += *base.c2_shift;
        p.c2_shift = shift;
        ScalarField f = Q1 * 2.0;
        f += N1;
        f *= delta;
        if (base.forcing) f += *base.forcing;
        p.forcing = f;

        ScalarField psi_new;
        if (config.newton) {
          psi_new = detail::newton_correction(p, psi_k, rep.eps, solver);
          ++st.inner_iterations;
        } else {
          PicardResult pr = picard_solve(p, rep.eps, params, psi_k, &solver);
          st.inner_iterations += pr.report.iterations;
          if (pr.report.status != SolveStatus::Converged) {
            std::ostringstream os;
            os << "psi update at outer iteration " << it << ": " << to_string(pr.report.status);
            fail(ErrorKind::NonConvergence, os.str());
          }
          psi_new = std::move(pr.phi);
        }

        const double change = std::max(max_abs_diff(psi_new, psi_k), delta * max_abs_diff(zt_new, zt_k));
        st.change_history.push_back(change);
        st.outer_iterations = it;
        psi_k = std::move(psi_new);
        zt_k = std::move(zt_new);
        s.omega_tilde = tr.omega;
        if (!std::isfinite(change)) fail(ErrorKind::NonConvergence, "outer iteration produced non-finite values");
        if (change <= config.outer_tol) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        std::ostringstream os;
        os << "outer loop did not reach " << config.outer_tol << " in " << config.outer_max_iters
           << " iterations at delta = " << delta;
        fail(ErrorKind::NonConvergence, os.str());
      }

      s.psi = psi_k;
      s.zeta_tilde = zt_k;
      s.zeta = zt_k * delta;
      const F1Reconstruction f1 = reconstruct_F1(s.psi, s.zeta_tilde, config.anchor, curl_limit);
      s.F1 = f1.F1;
      st.curl_defect = f1.curl_defect;
      s.Q1 = compute_Q1(base.law, s.psi, s.zeta_tilde, s.F1);
      s.N1 = compute_N1(s.psi, s.zeta_tilde);
      const C2Field c2 = c2_quasi(base.law, s.psi, s.zeta_tilde, delta, s.F1, base.c2_floor);
      s.c2 = c2.c2;
      st.clamped = c2.n_clamped;
      const VectorField U = gradient(s.psi) + perp_gradient(s.zeta);
      const RegimeReport rr = classify(U, s.c2, kDefaultSonicTolerance, &c2.clamped);
      s.L2 = rr.L2;
      st.max_L2 = rr.max_L2;
      st.psi_shift = max_abs_diff(s.psi, out.phi);
      const RotationalResidual rot_res = full_rotational_residual(s.psi, s.zeta, base.law, config.anchor);
      st.r1 = max_abs_interior(rot_res.r1);
      st.r2 = max_abs_interior(rot_res.r2);
      if (!(rr.max_L2 < 1.0 - config.sonic_margin)) {
        std::ostringstream os;
        os << "max L^2 = " << rr.max_L2 << " reaches 1 - " << config.sonic_margin << " at delta = " << delta;
        fail(ErrorKind::SonicEncroachment, os.str());
      }
      st.status = SolveStatus::Converged;
    } catch (const Error& e) {
      st.status = e.kind() == ErrorKind::NonConvergence ? SolveStatus::NonConvergence : SolveStatus::Failed;
      st.error = e.what();
      rep.error = e.what();
      rep.stages.push_back(st);
      failed = true;
      break;
    }
    rep.stages.push_back(st);
    out.states.push_back(std::move(s));
    psi = psi_k;
    zt = zt_k;
  }

  if (!failed) {
    rep.status = SolveStatus::Converged;
  } else {
    rep.status = out.states.empty() ? SolveStatus::Failed : SolveStatus::PartialContinuation;
  }
  return out;
}

}  // namespace selfsim
