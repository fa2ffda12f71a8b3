#pragma once

/// @file potential.hpp
/// @brief Degenerate elliptic potential-flow solver: closure c^2(phi),
/// operator Q and its regularization Q_eps = Q + eps Delta, frozen-coefficient
/// Dirichlet solves, relaxed Picard iteration and eps-continuation.
///
///   Q phi = (c^2 - phi_1^2) phi_11 - 2 phi_1 phi_2 phi_12 + (c^2 - phi_2^2) phi_22
///           - g |grad phi|^2 + z phi + s
///
/// gamma != 1:  c^2 = -(gamma-1)(phi + |grad phi|^2 / 2), g = gamma, z = -2(gamma-1), s = 0
/// gamma == 1:  c^2 = a^2,                                g = 1,     z = 0,           s = 2 a^2
///
/// Both rows are c^2 Delta phi - (D^2 phi) grad phi . grad phi - |grad phi|^2 + 2 c^2.
///
/// Problems may carry a forcing f (solve Q_eps phi = f) and a fixed additive
/// shift of c^2 in the principal part, which the quasi-potential solver uses.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/gas.hpp"
#include "selfsim/linear.hpp"
#include "selfsim/regime.hpp"

namespace selfsim {

struct PotentialProblem {
  GasLaw law;
  Grid2D grid;
  /// Frame values are the Dirichlet data; interior values seed the iteration.
  ScalarField phi_b;
  double c2_floor = 1e-8;
  double cap_M = 1e6;
  /// Right-hand side f of Q_eps phi = f (zero when absent).
  std::optional<ScalarField> forcing;
  /// Added to c^2 in the principal coefficients only.
  std::optional<ScalarField> c2_shift;

  PotentialProblem(GasLaw law_, ScalarField phi_b_) : law(law_), grid(phi_b_.grid()), phi_b(std::move(phi_b_)) {}

  void validate() const {
    if (!all_finite(phi_b)) fail(ErrorKind::Config, "boundary data must be finite");
    if (!(c2_floor > 0.0)) fail(ErrorKind::Config, "c2_floor must be > 0");
    if (!(cap_M > 0.0)) fail(ErrorKind::Config, "cap_M must be > 0");
    if (forcing) require_same_grid(grid, forcing->grid(), "forcing");
    if (c2_shift) require_same_grid(grid, c2_shift->grid(), "c2_shift");
  }
};

struct PicardParams {
  double relax_theta = 0.7;
  double tol_fixed_point = 1e-10;
  int max_iters = 200;
  double lin_tol = 1e-11;
  /// 0 selects 20 nx ny. The direct solver uses it as a cap on refinement sweeps.
  long lin_max_iters = 0;

  void validate() const {
    if (!(relax_theta > 0.0 && relax_theta <= 1.0)) fail(ErrorKind::Config, "relax_theta must lie in (0, 1]");
    if (!(tol_fixed_point > 0.0)) fail(ErrorKind::Config, "tol_fixed_point must be > 0");
    if (max_iters <= 0) fail(ErrorKind::Config, "max_iters must be > 0");
    if (!(lin_tol > 0.0)) fail(ErrorKind::Config, "lin_tol must be > 0");
    if (lin_max_iters < 0) fail(ErrorKind::Config, "lin_max_iters must be >= 0");
  }

  LinearOptions linear(const Grid2D& g) const {
    LinearOptions o;
    o.lin_tol = lin_tol;
    const long cap = lin_max_iters > 0 ? lin_max_iters : 20L * g.nx() * g.ny();
    o.max_iters = static_cast<int>(std::min<long>(cap, 10));
    return o;
  }
};

struct EpsilonSchedule {
  double eps0 = 0.1;
  double ratio = 0.5;
  double eps_min = 1e-6;
  /// Attempt a final unregularized pass.
  bool zero_pass = true;

  void validate() const {
    if (!(eps_min > 0.0)) fail(ErrorKind::Config, "eps_min must be > 0");
    if (!(eps0 > eps_min)) fail(ErrorKind::Config, "eps0 must exceed eps_min");
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorKind::Config, "ratio must lie in (0, 1)");
  }

  /// eps0, eps0 ratio, ... while above eps_min, then eps_min itself.
  std::vector<double> stages() const {
    validate();
    std::vector<double> out;
    for (double e = eps0; e > eps_min * (1.0 + 1e-12); e *= ratio) out.push_back(e);
    out.push_back(eps_min);
    return out;
  }
};

enum class SolveStatus { Converged, NonConvergence, Diverged, ClampedAtFinal, PartialContinuation, Failed };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::NonConvergence: return "NonConvergence";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::ClampedAtFinal: return "ClampedAtFinal";
    case SolveStatus::PartialContinuation: return "PartialContinuation";
    case SolveStatus::Failed: return "Failed";
  }
  return "?";
}

struct StageReport {
  double eps = 0.0;
  SolveStatus status = SolveStatus::NonConvergence;
  int iterations = 0;
  double theta = 0.0;
  bool theta_halved = false;
  std::vector<double> fixed_point_history;
  std::vector<double> linear_residual_history;
  std::vector<double> min_ellipticity_history;
  /// max interior |Q_eps phi - f| of the returned iterate.
  double residual = 0.0;
  std::size_t clamped = 0;
  std::string error;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Failed;
  std::vector<StageReport> stages;
  double final_eps = 0.0;
  bool zero_pass_attempted = false;
  bool zero_pass_converged = false;
  /// max interior |Q phi - f| at eps = 0.
  double residual_Q = 0.0;
  double c2_min = 0.0;
  double c2_max = 0.0;
  double max_L2 = 0.0;
  NodeIndex max_L2_at{};
  std::size_t clamped = 0;
  AuditReport audit;
  std::string error;
};

// ---------------------------------------------------------------------------
// Closure and operator

struct C2Field {
  ScalarField c2;
  NodeMask clamped;
  std::size_t n_clamped = 0;
};

inline double c2_raw(const GasLaw& law, double phi, double p1, double p2) {
  if (law.isothermal()) return law.a() * law.a();
  return -(law.gamma() - 1.0) * (phi + 0.5 * (p1 * p1 + p2 * p2));
}

/// Nodewise closure; values at or below c2_floor are raised to c2_floor and counted.
inline C2Field c2_of_phi(const GasLaw& law, const ScalarField& phi, const VectorField& grad_phi,
                         double c2_floor = 1e-8, const ScalarField* shift = nullptr) {
  require_same_grid(phi.grid(), grad_phi.grid(), "c2_of_phi");
  C2Field r;
  r.c2 = ScalarField(phi.grid());
  r.clamped.assign(phi.size(), 0);
  for (std::size_t k = 0; k < phi.size(); ++k) {
    double c2 = c2_raw(law, phi[k], grad_phi.u[k], grad_phi.v[k]);
    if (shift) c2 += (*shift)[k];
    if (!(c2 > c2_floor)) {
      c2 = c2_floor;
      r.clamped[k] = 1;
      ++r.n_clamped;
    }
    r.c2[k] = c2;
  }
  return r;
}

struct LowerOrder {
  double drift;  // coefficient g of -g |grad phi|^2
  double zero;   // z
  double source; // s
};

inline LowerOrder lower_order(const GasLaw& law) {
  if (law.isothermal()) return {1.0, 0.0, 2.0 * law.a() * law.a()};
  const double g = law.gamma();
  return {g, -2.0 * (g - 1.0), 0.0};
}

/// Q_eps phi (+ shift Delta phi) - forcing at interior nodes; zero on the frame.
inline ScalarField residual_Q(const GasLaw& law, const ScalarField& phi, double eps,
                              double c2_floor = 1e-8, const ScalarField* forcing = nullptr,
                              const ScalarField* shift = nullptr) {
  const Grid2D& g = phi.grid();
  const VectorField G = gradient(phi);
  const Hessian H = hessian(phi);
  const C2Field c2 = c2_of_phi(law, phi, G, c2_floor, shift);
  const LowerOrder lo = lower_order(law);
  ScalarField r(g);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const std::size_t k = g.index(i, j);
      const double p1 = G.u[k], p2 = G.v[k];
      double q = (c2.c2[k] - p1 * p1 + eps) * H.f11[k] - 2.0 * p1 * p2 * H.f12[k] +
                 (c2.c2[k] - p2 * p2 + eps) * H.f22[k] - lo.drift * (p1 * p1 + p2 * p2) +
                 lo.zero * phi[k] + lo.source;
      if (forcing) q -= (*forcing)[k];
      r[k] = q;
    }
  return r;
}

inline ScalarField residual_Q(const PotentialProblem& p, const ScalarField& phi, double eps) {
  return residual_Q(p.law, phi, eps, p.c2_floor, p.forcing ? &*p.forcing : nullptr,
                    p.c2_shift ? &*p.c2_shift : nullptr);
}

struct FrozenSystem {
  StencilCoefficients coef;
  /// Right-hand side of L_eps v = rhs at interior nodes.
  ScalarField rhs;
  std::size_t clamped = 0;
  double min_ellipticity = 0.0;
};

/// Frozen operator at w: principal (c^2(w) - w_1^2 + eps, -2 w_1 w_2, c^2(w) - w_2^2 + eps),
/// drift -g grad w, zero order z; rhs = f - s.
inline FrozenSystem assemble_frozen(const GasLaw& law, const ScalarField& w, double eps,
                                    double c2_floor = 1e-8, double cap_M = 1e6,
                                    const ScalarField* forcing = nullptr,
                                    const ScalarField* shift = nullptr) {
  const double wmax = max_abs(w);
  if (!(wmax <= cap_M)) {
    std::ostringstream os;
    os << "iterate sup-norm " << wmax << " exceeds cap_M = " << cap_M;
    fail(ErrorKind::CapExceeded, os.str());
  }
  const Grid2D& g = w.grid();
  const VectorField G = gradient(w);
  const C2Field c2 = c2_of_phi(law, w, G, c2_floor, shift);
  const LowerOrder lo = lower_order(law);
  FrozenSystem s{StencilCoefficients(g), ScalarField(g), c2.n_clamped, 0.0};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double p1 = G.u[k], p2 = G.v[k];
    s.coef.a11[k] = c2.c2[k] - p1 * p1 + eps;
    s.coef.a12[k] = -2.0 * p1 * p2;
    s.coef.a22[k] = c2.c2[k] - p2 * p2 + eps;
    s.coef.b1[k] = -lo.drift * p1;
    s.coef.b2[k] = -lo.drift * p2;
    s.coef.c0[k] = lo.zero;
    s.rhs[k] = (forcing ? (*forcing)[k] : 0.0) - lo.source;
  }
  s.min_ellipticity = ellipticity_probe(s.coef).min_eigenvalue;
  return s;
}

inline FrozenSystem assemble_frozen(const PotentialProblem& p, const ScalarField& w, double eps) {
  return assemble_frozen(p.law, w, eps, p.c2_floor, p.cap_M, p.forcing ? &*p.forcing : nullptr,
                         p.c2_shift ? &*p.c2_shift : nullptr);
}

inline ScalarField solve_linear_dirichlet(const FrozenSystem& sys, const ScalarField& phi_b,
                                          const LinearOptions& opts = {},
                                          LinearReport* report = nullptr) {
  return solve_dirichlet(sys.coef, sys.rhs, phi_b, opts, report);
}

// ---------------------------------------------------------------------------
// Picard iteration

struct PicardResult {
  ScalarField phi;
  StageReport report;
};

namespace detail {

inline void require_frame_match(const ScalarField& w0, const ScalarField& phi_b) {
  const Grid2D& g = w0.grid();
  require_same_grid(g, phi_b.grid(), "initial iterate");
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (g.on_boundary(i, j) && w0(i, j) != phi_b(i, j)) {
        fail(ErrorKind::Config, "initial iterate must match the boundary data on the frame");
      }
}

}  // namespace detail

/// w_{k+1} = (1 - theta) w_k + theta T(w_k) until the sup-norm change drops
/// below tol_fixed_point. CapExceeded and IndefiniteSystem propagate with the
/// iteration number in the message; non-convergence is reported in the status
/// together with the best iterate.
inline PicardResult picard_solve(const PotentialProblem& problem, double eps, const PicardParams& params,
                                 const ScalarField& w0, DirichletSolver* shared_solver = nullptr) {
  problem.validate();
  params.validate();
  if (!(eps >= 0.0)) fail(ErrorKind::Config, "eps must be >= 0");
  detail::require_frame_match(w0, problem.phi_b);

  DirichletSolver local(params.linear(problem.grid));
  DirichletSolver& solver = shared_solver ? *shared_solver : local;
  solver.set_options(params.linear(problem.grid));

  PicardResult out;
  StageReport& rep = out.report;
  rep.eps = eps;
  rep.theta = params.relax_theta;

  ScalarField w = w0;
  ScalarField best = w0;
  double best_diff = std::numeric_limits<double>::infinity();
  double prev_diff = std::numeric_limits<double>::infinity();
  int growth = 0;
  bool converged = false;

  for (int k = 1; k <= params.max_iters; ++k) {
    ScalarField T;
    try {
      FrozenSystem sys = assemble_frozen(problem, w, eps);
      rep.min_ellipticity_history.push_back(sys.min_ellipticity);
      LinearReport lr;
      T = solver.solve(sys.coef, sys.rhs, problem.phi_b, &lr);
      rep.linear_residual_history.push_back(lr.rel_residual);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "Picard iteration " << k << " at eps = " << eps << ": " << e.detail();
      throw Error(e.kind(), os.str());
    }
    ScalarField next = w;
    double diff = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      next[n] = (1.0 - rep.theta) * w[n] + rep.theta * T[n];
      diff = std::max(diff, std::abs(next[n] - w[n]));
    }
    rep.fixed_point_history.push_back(diff);
    rep.iterations = k;
    w = std::move(next);
    if (!std::isfinite(diff)) break;
    if (diff < best_diff) {
      best_diff = diff;
      best = w;
    }
    if (diff <= params.tol_fixed_point) {
      converged = true;
      break;
    }
    growth = diff > prev_diff ? growth + 1 : 0;
    prev_diff = diff;
    if (growth >= 5) {
      if (rep.theta_halved) {
        rep.status = SolveStatus::Diverged;
        break;
      }
      rep.theta *= 0.5;
      rep.theta_halved = true;
      growth = 0;
    }
  }

  if (converged) {
    out.phi = std::move(w);
    const C2Field c2 = c2_of_phi(problem.law, out.phi, gradient(out.phi), problem.c2_floor,
                                 problem.c2_shift ? &*problem.c2_shift : nullptr);
    rep.clamped = c2.n_clamped;
    rep.status = c2.n_clamped == 0 ? SolveStatus::Converged : SolveStatus::ClampedAtFinal;
  } else {
    out.phi = std::move(best);
    if (rep.status != SolveStatus::Diverged) rep.status = SolveStatus::NonConvergence;
    rep.clamped = c2_of_phi(problem.law, out.phi, gradient(out.phi), problem.c2_floor,
                            problem.c2_shift ? &*problem.c2_shift : nullptr)
                      .n_clamped;
  }
  rep.residual = max_abs_interior(residual_Q(problem, out.phi, eps));
  return out;
}

// ---------------------------------------------------------------------------
// Continuation

struct ContinuationResult {
  ScalarField phi;
  SolveReport report;
};

/// Fills the closure, pseudo-Mach and audit fields of a report for phi.
inline void summarize_solution(const PotentialProblem& problem, const ScalarField& phi, SolveReport& rep) {
  const VectorField G = gradient(phi);
  const C2Field c2 = c2_of_phi(problem.law, phi, G, problem.c2_floor,
                               problem.c2_shift ? &*problem.c2_shift : nullptr);
  rep.residual_Q = max_abs_interior(residual_Q(problem, phi, 0.0));
  rep.c2_min = min_value(c2.c2);
  rep.c2_max = max_value(c2.c2);
  rep.clamped = c2.n_clamped;
  const RegimeReport rr = classify(G, c2.c2, kDefaultSonicTolerance, &c2.clamped);
  rep.max_L2 = rr.max_L2;
  rep.max_L2_at = rr.max_L2_at;
  rep.audit = rr.audit;
}

inline ContinuationResult epsilon_continuation(const PotentialProblem& problem, const EpsilonSchedule& schedule,
                                               const PicardParams& params) {
  problem.validate();
  params.validate();
  const std::vector<double> eps = schedule.stages();

  ContinuationResult out;
  SolveReport& rep = out.report;
  DirichletSolver solver(params.linear(problem.grid));
  ScalarField w = problem.phi_b;
  bool any = false;
  bool failed = false;

  for (double e : eps) {
    try {
      PicardResult r = picard_solve(problem, e, params, w, &solver);
      rep.stages.push_back(r.report);
      if (r.report.status != SolveStatus::Converged) {
        failed = true;
        break;
      }
      w = std::move(r.phi);
      any = true;
      rep.final_eps = e;
    } catch (const Error& err) {
      StageReport sr;
      sr.eps = e;
      sr.status = SolveStatus::Failed;
      sr.error = err.what();
      rep.stages.push_back(sr);
      rep.error = err.what();
      failed = true;
      break;
    }
  }

  if (!failed && schedule.zero_pass) {
    rep.zero_pass_attempted = true;
    try {
      PicardResult r = picard_solve(problem, 0.0, params, w, &solver);
      rep.stages.push_back(r.report);
      if (r.report.status == SolveStatus::Converged) {
        w = std::move(r.phi);
        rep.zero_pass_converged = true;
        rep.final_eps = 0.0;
      }
    } catch (const Error& err) {
      StageReport sr;
      sr.eps = 0.0;
      sr.status = SolveStatus::Failed;
      sr.error = err.what();
      rep.stages.push_back(sr);
    }
  }

  rep.status = !failed ? SolveStatus::Converged : (any ? SolveStatus::PartialContinuation : SolveStatus::Failed);
  if (rep.error.empty() && failed) rep.error = std::string(to_string(rep.stages.back().status));
  out.phi = any || !failed ? std::move(w) : problem.phi_b;
  summarize_solution(problem, out.phi, rep);
  return out;
}

/// phi = -|xi|^2 / 2 + K on every node.
inline ScalarField quiescent_profile(const Grid2D& g, double K) {
  return sample(g, [K](double x, double y) { return -0.5 * (x * x + y * y) + K; });
}

}  // namespace selfsim
