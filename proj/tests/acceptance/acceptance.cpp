// Acceptance checks. Prints one PASS/FAIL line per item; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "oracles/mms_forcing.hpp"
#include "selfsim/field_io.hpp"
#include "selfsim/hodge.hpp"
#include "selfsim/potential.hpp"
#include "selfsim/quasipotential.hpp"
#include "selfsim/regime.hpp"
#include "selfsim/verify.hpp"
#include "selfsim/vorticity.hpp"

#ifndef SELFSIM_CLI_PATH
#error "SELFSIM_CLI_PATH must name the selfsim executable"
#endif

using namespace selfsim;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLinTol = 1e-11;

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

int failures = 0;

void item(int id, const std::string& name, const std::function<bool(std::string&)>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool ok = false;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!ok) ++failures;
  std::printf("%s %2d %s: %s [%.2fs]\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
}

const Grid2D kSquare65(-0.5, 0.5, -0.5, 0.5, 65, 65);
const GasLaw kGamma2(1.0, 2.0, 1.0);

ScalarField sinsin(const Grid2D& g) {
  return sample(g, [](double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); });
}

bool is_corner(const Grid2D& g, NodeIndex n) {
  return (n.i == 0 || n.i == g.nx() - 1) && (n.j == 0 || n.j == g.ny() - 1);
}

bool quiescent_exact(std::string& d) {
  const PotentialProblem p(kGamma2, quiescent_profile(kSquare65, -1.0));
  EpsilonSchedule s;
  s.eps_min = 1e-6;
  PicardParams params;
  params.lin_tol = kLinTol;
  const auto r = epsilon_continuation(p, s, params);
  const double err = max_abs_diff(r.phi, quiescent_profile(kSquare65, -1.0));
  const double h = kSquare65.hx();
  d = "status " + std::string(to_string(r.report.status)) + ", error " + num(err) + ", max L2 " +
      num(r.report.max_L2) + " at (" + std::to_string(r.report.max_L2_at.i) + "," +
      std::to_string(r.report.max_L2_at.j) + "), audit " + std::string(to_string(r.report.audit.verdict));
  return r.report.status == SolveStatus::Converged && err <= std::max(10 * kLinTol, 5 * s.eps_min) &&
         std::abs(r.report.max_L2 - 0.5) <= 2 * h && is_corner(kSquare65, r.report.max_L2_at) &&
         r.report.audit.verdict == AuditVerdict::Pass;
}

bool frozen_inversion(std::string& d) {
  ScalarField phi = quiescent_profile(kSquare65, -1.0);
  phi += sinsin(kSquare65) * 0.05;
  const FrozenSystem sys = assemble_frozen(kGamma2, phi, 0.0);
  LinearOptions lin;
  lin.lin_tol = kLinTol;
  const ScalarField v = solve_dirichlet(sys.coef, apply_stencil(sys.coef, phi), phi, lin);
  const double err = max_abs_diff(v, phi);
  d = "error " + num(err);
  return err <= 10 * kLinTol;
}

bool manufactured(std::string& d) {
  double e[2];
  int k = 0;
  for (int n : {33, 65}) {
    const Grid2D g(-0.5, 0.5, -0.5, 0.5, n, n);
    PotentialProblem p(kGamma2, sample(g, oracle::mms_phi));
    p.forcing = sample(g, [](double x, double y) { return oracle::mms_forcing(x, y, 2.0); });
    PicardParams params;
    params.tol_fixed_point = 1e-12;
    const auto r = picard_solve(p, 0.0, params, p.phi_b);
    if (r.report.status != SolveStatus::Converged) {
      d = "Picard " + std::string(to_string(r.report.status)) + " on " + std::to_string(n);
      return false;
    }
    e[k++] = max_abs_diff_interior(r.phi, p.phi_b);
  }
  const double ratio = e[0] / e[1];
  d = "errors " + num(e[0]) + ", " + num(e[1]) + ", ratio " + num(ratio);
  return ratio >= 3.4 && ratio <= 4.6;
}

bool regularization_bias(std::string& d) {
  const ScalarField exact = quiescent_profile(kSquare65, -1.0);
  const PotentialProblem p(kGamma2, exact);
  PicardParams params;
  params.tol_fixed_point = 1e-12;
  double e[3];
  int k = 0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto r = picard_solve(p, eps, params, exact);
    if (r.report.status != SolveStatus::Converged) {
      d = "Picard " + std::string(to_string(r.report.status)) + " at eps " + num(eps);
      return false;
    }
    e[k++] = max_abs_diff(r.phi, exact);
  }
  const double r1 = e[0] / e[1], r2 = e[1] / e[2];
  d = "errors " + num(e[0]) + ", " + num(e[1]) + ", " + num(e[2]) + ", ratios " + num(r1) + ", " + num(r2);
  return r1 >= 8 && r1 <= 12 && r2 >= 8 && r2 <= 12;
}

bool discriminant_identity(std::string& d) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> P(-1.0, 1.0), C(0.1, 10.0);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const double p1 = P(rng), p2 = P(rng), c2 = C(rng);
    const Discriminant r = discriminant(p1, p2, c2);
    worst = std::max(worst, std::abs(r.disc - r.check));
  }
  d = "max defect " + num(worst);
  return worst <= 1e-12;
}

bool eigen_goldens(std::string& d) {
  const auto s = eigen_steady(2.0, 0.0, 1.0);
  const double r3 = std::sqrt(3.0) / 3.0;
  const double es =
      std::max({std::abs(s.lambdas[0] + r3), std::abs(s.lambdas[1]), std::abs(s.lambdas[2] - r3)});
  const auto t = eigen_time_dependent(0.0, 0.0, 1.0, 1.0, 0.0);
  const bool td = t.lambdas[0] == -1.0 && t.lambdas[1] == 0.0 && t.lambdas[2] == 1.0;
  const bool cx = eigen_steady(0.5, 0.0, 1.0).complex_pair;
  d = "steady error " + num(es) + ", time-dependent " + (td ? "ok" : "wrong") + ", complex flag " +
      (cx ? "set" : "missing");
  return es <= 1e-14 && td && cx && !s.complex_pair;
}

VectorField random_smooth(const Grid2D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> A(-1.0, 1.0), K(0.5, 3.0);
  const double a[6] = {A(rng), A(rng), A(rng), A(rng), A(rng), A(rng)};
  const double k[4] = {K(rng), K(rng), K(rng), K(rng)};
  return sample(
      g,
      [=](double x, double y) { return a[0] * std::sin(k[0] * x + k[1] * y) + a[1] * x * y + a[2] * std::exp(0.5 * y); },
      [=](double x, double y) { return a[3] * std::cos(k[2] * x - k[3] * y) + a[4] * x * x + a[5] * std::sin(x + y); });
}

bool hodge_round_trip(std::string& d) {
  std::mt19937_64 rng(7);
  LinearOptions lin;
  lin.lin_tol = kLinTol;
  double div_worst = 0.0, rot_worst = 0.0;
  for (int n = 0; n < 20; ++n) {
    const VectorField U = random_smooth(kSquare65, rng);
    const Decomposition dec = decompose(U, lin);
    div_worst = std::max(div_worst, dec.div_W_norm);
    rot_worst = std::max(rot_worst, max_abs_diff_interior(rot(dec.W), rot(U)));
  }
  d = "max |div W| " + num(div_worst) + ", max rot defect " + num(rot_worst);
  return div_worst <= 10 * kLinTol && rot_worst <= 1e-10;
}

bool integrability(std::string& d) {
  // Constant vorticity c with div U = -1 solves div(omega U) + omega = 0.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> A(-2.0, 2.0);
  const Grid2D g(-1.0, 1.0, -0.5, 1.5, 33, 33);
  double worst_eq = 0.0, worst_int = 0.0;
  for (int n = 0; n < 10; ++n) {
    const double c = A(rng), a = A(rng), b = A(rng), e = A(rng), f = A(rng);
    const ScalarField psi = sample(g, [=](double x, double y) {
      return -0.25 * (x * x + y * y) + a * x + b * y + e * (x * x - y * y) + f * x * y;
    });
    const VectorField W = sample(g, [=](double, double y) { return -0.5 * c * y; },
                                 [=](double x, double) { return 0.5 * c * x; });
    VectorField U = gradient(psi);
    U += W;
    const ScalarField omega = rot(U);
    const VectorField flux(pointwise([](double w, double u) { return w * u; }, omega, U.u),
                           pointwise([](double w, double v) { return w * v; }, omega, U.v));
    ScalarField eq = divergence(flux);
    eq += omega;
    worst_eq = std::max(worst_eq, max_abs_interior(eq));
    const BernoulliPair p = bernoulli_GH(U, psi, W);
    worst_int = std::max(worst_int, integrability_residual(p.G, p.H));
  }
  const Grid2D r(-1.0, 1.0, -1.0, 1.0, 33, 33);
  const VectorField R = sample(r, [](double, double y) { return -y; }, [](double x, double) { return x; });
  const BernoulliPair pr = bernoulli_GH(R, ScalarField(r), R);
  const double rigid = integrability_residual(pr.G, pr.H);
  const double rigid_eq = max_abs_interior(transport_residual(rot(R), R));
  d = "vorticity residual " + num(worst_eq) + ", integrability " + num(worst_int) + ", rigid rotation " +
      num(rigid) + " / " + num(rigid_eq);
  return worst_eq <= 1e-10 && worst_int <= 5e-10 && rigid == 2.0 && rigid_eq == 2.0;
}

ScalarField radial_psi(const Grid2D& g) {
  return sample(g, [](double x, double y) { return -0.5 * (x * x + y * y); });
}

bool transport(std::string& d) {
  const Grid2D g(0.25, 0.75, 0.25, 0.75, 65, 65);
  const ScalarField psi = radial_psi(g);
  InflowSet unit = inflow_boundary(psi);
  assign_inflow_values(unit, [](double, double) { return 1.0; });
  TransportParams tp;
  tp.step = g.hx() / 4;
  const auto res = transport_omega(psi, unit, tp);
  double rel = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double x = g.x(i), y = g.y(j);
      const double foot = std::hypot(x, y) * 0.75 / std::max(x, y);
      rel = std::max(rel, std::abs(res.omega(i, j) * std::hypot(x, y) / foot - 1.0));
    }
  const auto zero = transport_omega(psi, inflow_boundary(psi), tp);
  const double z = max_abs(zero.omega);

  double prev = 0.0, ratio_min = 1e300, ratio_max = 0.0;
  for (int n : {33, 65, 129}) {
    const Grid2D gn(0.25, 0.75, 0.25, 0.75, n, n);
    const ScalarField pn = radial_psi(gn);
    InflowSet in = inflow_boundary(pn);
    assign_inflow_values(in, [](double, double) { return 1.0; });
    const auto rn = transport_omega(pn, in);
    const double r = max_abs_interior(transport_residual(rn.omega, gradient(pn)));
    if (prev > 0.0) {
      ratio_min = std::min(ratio_min, prev / r);
      ratio_max = std::max(ratio_max, prev / r);
    }
    prev = r;
  }
  d = "omega|xi| relative " + num(rel) + ", zero data max " + num(z) + ", residual ratios " + num(ratio_min) +
      ".." + num(ratio_max) + ", uncovered " + std::to_string(res.uncovered);
  return rel <= 1e-4 && z == 0.0 && res.uncovered == 0 && ratio_min >= 1.6 && ratio_max <= 2.6;
}

bool gateaux(std::string& d) {
  const ScalarField psi0 = quiescent_profile(kSquare65, -1.0);
  const auto t = gateaux_check(psi0, sinsin(kSquare65), kGamma2, {1e-2, 1e-3, 1e-4});
  const double lx = max_abs_interior(linearized_L(psi0, sample(kSquare65, [](double x, double) { return x; }), kGamma2));
  d = "slope " + num(t.slope) + ", |L[xi_1]| " + num(lx);
  return t.slope >= 0.9 && t.slope <= 1.1 && lx <= 1e-12;
}

bool quasi_continuation(std::string& d) {
  const Grid2D g(0.25, 0.75, 0.25, 0.75, 33, 33);
  ScalarField b = quiescent_profile(g, -2.0);
  b += sinsin(g) * 0.05;
  const PotentialProblem prob(kGamma2, b);
  QuasiConfig c;
  c.delta_targets = {0.0, 1e-3, 1e-2};
  c.outer_tol = 1e-11;
  c.zeta_b = sample(g, [](double x, double y) { return x * x + 0.5 * y * y; });
  PicardParams params;
  params.tol_fixed_point = 1e-12;
  const auto r = solve_quasi(c, prob, EpsilonSchedule{}, params);
  if (r.report.status != SolveStatus::Converged || r.states.size() != 3) {
    d = "status " + std::string(to_string(r.report.status)) + " " + r.report.error;
    return false;
  }
  const double zero = max_abs_diff(r.states[0].psi, r.phi);
  const auto& st = r.report.stages;
  const double shift = st[2].psi_shift / st[1].psi_shift;
  const double r1 = st[2].r1 / st[1].r1;
  d = "delta=0 gap " + num(zero) + ", shift ratio " + num(shift) + ", r1 ratio " + num(r1);
  return zero <= c.outer_tol && shift >= 5 && shift <= 15 && r1 >= 100.0 / 3 && r1 <= 300.0;
}

bool gas(std::string& d) {
  const auto s = verify::gas_suite();
  d = std::to_string(s.passed()) + "/" + std::to_string(s.checks.size()) + " checks";
  for (const auto& c : s.checks)
    if (!c.passed) d += "; failed " + c.name + " (" + c.detail + ")";
  return s.failed() == 0;
}

bool determinism(std::string& d) {
  const fs::path dir = fs::temp_directory_path() / ("selfsim_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  write_text_atomic(dir / "config.json",
                    R"({"gas": {"a": 1.0, "gamma": 2.0, "rho_floor": 1.0},
 "grid": {"x0": -0.5, "x1": 0.5, "y0": -0.5, "y1": 0.5, "nx": 65, "ny": 65},
 "boundary": {"kind": "quiescent", "K": -1.0},
 "solver": {"eps_min": 1e-6}}
)");
  std::string bytes[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path out = dir / ("run" + std::to_string(k));
    const std::string cmd = std::string("\"") + SELFSIM_CLI_PATH + "\" solve-potential --config \"" +
                            (dir / "config.json").string() + "\" --out-dir \"" + out.string() + "\" > /dev/null";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
      d = "run " + std::to_string(k) + " exited with " + std::to_string(rc);
      return false;
    }
    bytes[k] = read_text(out / "phi.f2d");
  }
  fs::remove_all(dir);
  d = std::to_string(bytes[0].size()) + " bytes, " + (bytes[0] == bytes[1] ? "identical" : "different");
  return !bytes[0].empty() && bytes[0] == bytes[1];
}

}  // namespace

int main() {
  item(1, "quiescent exact solution", quiescent_exact);
  item(2, "frozen system inversion", frozen_inversion);
  item(3, "manufactured solution second order", manufactured);
  item(4, "regularization bias linear in eps", regularization_bias);
  item(5, "discriminant identity", discriminant_identity);
  item(6, "eigenvalue goldens", eigen_goldens);
  item(7, "Hodge round trip", hodge_round_trip);
  item(8, "Bernoulli integrability equivalence", integrability);
  item(9, "vorticity transport", transport);
  item(10, "Gateaux derivative check", gateaux);
  item(11, "quasi-potential delta continuation", quasi_continuation);
  item(12, "gas law suite", gas);
  item(13, "CLI determinism", determinism);
  std::printf("%d of 13 passed\n", 13 - failures);
  return failures;
}
