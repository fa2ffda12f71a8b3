#pragma once

/// @file verify.hpp
/// @brief Built-in invariant suites run by `selfsim verify`. Small grids only;
/// the whole set finishes in a few seconds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "selfsim/field.hpp"
#include "selfsim/gas.hpp"
#include "selfsim/hodge.hpp"
#include "selfsim/linear.hpp"
#include "selfsim/potential.hpp"
#include "selfsim/quasipotential.hpp"
#include "selfsim/regime.hpp"
#include "selfsim/vorticity.hpp"

namespace selfsim::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  std::vector<CheckResult> checks;

  int passed() const {
    int n = 0;
    for (const auto& c : checks) n += c.passed;
    return n;
  }
  int failed() const { return static_cast<int>(checks.size()) - passed(); }
};

class Suite {
 public:
  explicit Suite(std::string name) { result_.name = std::move(name); }

  /// Runs fn; a thrown exception counts as a failure.
  void check(const std::string& name, const std::function<bool(std::string&)>& fn) {
    CheckResult c{name, false, {}};
    try {
      c.passed = fn(c.detail);
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = e.what();
    }
    result_.checks.push_back(std::move(c));
  }

  SuiteResult take() { return std::move(result_); }

 private:
  SuiteResult result_;
};

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

inline bool below(double v, double tol, std::string& detail) {
  detail = num(v);
  return v <= tol;
}

inline ScalarField sinsin(const Grid2D& g) {
  return sample(g, [](double x, double y) {
    return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
  });
}

}  // namespace detail

inline SuiteResult gas_suite() {
  Suite s("gas");
  s.check("pressure is increasing", [](std::string& d) {
    for (double g : {-1.0, -0.5, 0.5, 1.0, 1.4, 2.0, 3.0}) {
      const GasLaw law(1.0, g, 0.5);
      for (double rho = 0.6; rho < 5.0; rho += 0.1) {
        if (!(sound_speed_sq(law, rho) > 0.0)) {
          d = "gamma " + detail::num(g);
          return false;
        }
      }
    }
    return true;
  });
  s.check("sound speed matches dp/drho", [](std::string& d) {
    double worst = 0.0;
    for (double g : {-1.0, 0.5, 1.4, 3.0}) {
      const GasLaw law(1.3, g, 0.5);
      for (double rho : {0.7, 1.0, 2.5}) {
        const double h = 1e-6 * rho;
        const double fd = (pressure(law, rho + h) - pressure(law, rho - h)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - sound_speed_sq(law, rho)) / sound_speed_sq(law, rho));
      }
    }
    return detail::below(worst, 1e-6, d);
  });
  s.check("enthalpy round trip", [](std::string& d) {
    double worst = 0.0;
    for (double g : {-1.0, 0.5, 1.0, 2.0}) {
      const GasLaw law(1.0, g, 0.5);
      for (double rho : {0.75, 1.0, 3.0}) {
        worst = std::max(worst, std::abs(enthalpy_inverse(law, enthalpy(law, rho)) - rho) / rho);
      }
    }
    return detail::below(worst, 1e-10, d);
  });
  s.check("gamma = 0 rejected", [](std::string&) {
    try {
      GasLaw(1.0, 0.0, 1.0);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::Domain;
    }
    return false;
  });
  return s.take();
}

inline SuiteResult field_suite() {
  Suite s("field");
  const Grid2D g(-0.5, 1.0, -1.0, 0.5, 13, 17);
  s.check("derivatives exact on quadratics", [&](std::string& d) {
    const auto q = sample(g, [](double x, double y) { return 1.0 + 2.0 * x - y + 0.5 * x * x + 3.0 * x * y - y * y; });
    const Hessian H = hessian(q);
    const VectorField G = gradient(q);
    double e = max_abs_diff(G.u, sample(g, [](double x, double y) { return 2.0 + x + 3.0 * y; }));
    e = std::max(e, max_abs_diff(G.v, sample(g, [](double x, double y) { return -1.0 + 3.0 * x - 2.0 * y; })));
    e = std::max(e, max_abs_diff(H.f11, ScalarField(g, 1.0)));
    e = std::max(e, max_abs_diff(H.f12, ScalarField(g, 3.0)));
    e = std::max(e, max_abs_diff(H.f22, ScalarField(g, -2.0)));
    return detail::below(e, 1e-11, d);
  });
  s.check("rot grad and div perp_grad vanish", [&](std::string& d) {
    const auto f = detail::sinsin(g);
    const double e = std::max(max_abs_interior(rot(gradient(f))), max_abs_interior(divergence(perp_gradient(f))));
    return detail::below(e, 1e-11, d);
  });
  return s.take();
}

inline SuiteResult regime_suite(std::uint64_t seed) {
  Suite s("regime");
  s.check("steady eigenvalues", [](std::string& d) {
    const auto e = eigen_steady(2.0, 0.0, 1.0);
    const double r = std::sqrt(3.0) / 3.0;
    const double err = std::max({std::abs(e.lambdas[0] + r), std::abs(e.lambdas[1]), std::abs(e.lambdas[2] - r)});
    return detail::below(err, 1e-14, d);
  });
  s.check("complex pair below sonic", [](std::string&) { return eigen_steady(0.5, 0.0, 1.0).complex_pair; });
  s.check("discriminant identity", [seed](std::string& d) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0), C(0.1, 10.0);
    double worst = 0.0;
    for (int n = 0; n < 10000; ++n) {
      const double p1 = U(rng), p2 = U(rng), c2 = C(rng);
      const Discriminant r = discriminant(p1, p2, c2);
      worst = std::max(worst, std::abs(r.disc - r.check));
    }
    return detail::below(worst, 1e-12, d);
  });
  return s.take();
}

inline SuiteResult hodge_suite() {
  Suite s("hodge");
  const Grid2D g(-1.0, 1.0, -1.0, 1.0, 25, 25);
  s.check("splitting is solenoidal and keeps the curl", [&](std::string& d) {
    auto U = gradient(detail::sinsin(g));
    U += sample(g, [](double, double y) { return -y * y; }, [](double x, double) { return x; });
    const Decomposition dec = decompose(U);
    const double e = std::max(dec.div_W_norm, max_abs_diff_interior(rot(dec.W), rot(U)));
    return detail::below(e, 1e-9, d);
  });
  s.check("rigid rotation is not integrable", [&](std::string& d) {
    const auto U = sample(g, [](double, double y) { return -y; }, [](double x, double) { return x; });
    const Decomposition dec = decompose(U);
    const BernoulliPair p = bernoulli_GH(U, dec.psi, dec.W);
    return detail::below(std::abs(integrability_residual(p.G, p.H) - 2.0), 1e-10, d);
  });
  return s.take();
}

inline SuiteResult potential_suite() {
  Suite s("potential");
  const Grid2D g(-0.5, 0.5, -0.5, 0.5, 17, 17);
  const GasLaw law(1.0, 2.0, 1.0);
  s.check("quiescent state is a fixed point", [&](std::string& d) {
    return detail::below(max_abs_interior(residual_Q(law, quiescent_profile(g, -1.0), 0.0)), 1e-12, d);
  });
  s.check("continuation recovers the quiescent state", [&](std::string& d) {
    ScalarField b = quiescent_profile(g, -1.0);
    for (int j = 1; j < g.ny() - 1; ++j)
      for (int i = 1; i < g.nx() - 1; ++i) b(i, j) += 0.02;
    const PotentialProblem p(law, b);
    const auto r = epsilon_continuation(p, EpsilonSchedule{}, PicardParams{});
    if (r.report.status != SolveStatus::Converged) {
      d = std::string(to_string(r.report.status));
      return false;
    }
    return detail::below(max_abs_diff(r.phi, quiescent_profile(g, -1.0)), 1e-8, d);
  });
  s.check("frozen system inverts its own operator", [&](std::string& d) {
    ScalarField phi = quiescent_profile(g, -1.0);
    phi += detail::sinsin(g) * 0.05;
    const FrozenSystem sys = assemble_frozen(law, phi, 0.0);
    ScalarField rhs = apply_stencil(sys.coef, phi);
    const ScalarField v = solve_dirichlet(sys.coef, rhs, phi);
    return detail::below(max_abs_diff(v, phi), 1e-10, d);
  });
  return s.take();
}

inline SuiteResult vorticity_suite() {
  Suite s("vorticity");
  const Grid2D g(0.25, 0.75, 0.25, 0.75, 17, 17);
  const ScalarField psi = sample(g, [](double x, double y) { return -0.5 * (x * x + y * y); });
  s.check("zero inflow data give zero vorticity", [&](std::string& d) {
    const auto r = transport_omega(psi, inflow_boundary(psi));
    return detail::below(max_abs(r.omega), 0.0, d);
  });
  s.check("radial rays keep omega |xi| constant", [&](std::string& d) {
    InflowSet in = inflow_boundary(psi);
    assign_inflow_values(in, [](double, double) { return 1.0; });
    const auto r = transport_omega(psi, in);
    double worst = 0.0;
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        worst = std::max(worst, std::abs(r.omega(i, j) * std::max(g.x(i), g.y(j)) / 0.75 - 1.0));
    return detail::below(worst, 1e-4, d);
  });
  s.check("rigid rotation residual", [&](std::string& d) {
    const Grid2D h(-1, 1, -1, 1, 9, 9);
    const auto U = sample(h, [](double, double y) { return -y; }, [](double x, double) { return x; });
    return detail::below(std::abs(max_abs_interior(transport_residual(ScalarField(h, 2.0), U)) - 2.0), 1e-12, d);
  });
  return s.take();
}

inline SuiteResult quasipotential_suite() {
  Suite s("quasipotential");
  const Grid2D g(-0.5, 0.5, -0.5, 0.5, 21, 21);
  const GasLaw law(1.0, 2.0, 1.0);
  s.check("linearized operator annihilates translations", [&](std::string& d) {
    const auto v = sample(g, [](double x, double) { return x; });
    return detail::below(max_abs_interior(linearized_L(quiescent_profile(g, -1.0), v, law)), 1e-12, d);
  });
  s.check("Gateaux defect is first order", [&](std::string& d) {
    const auto t = gateaux_check(quiescent_profile(g, -1.0), detail::sinsin(g), law, {1e-2, 1e-3, 1e-4});
    d = detail::num(t.slope);
    return t.slope >= 0.9 && t.slope <= 1.1;
  });
  s.check("delta = 0 reduces to the potential solution", [&](std::string& d) {
    const Grid2D h(0.25, 0.75, 0.25, 0.75, 13, 13);
    ScalarField b = quiescent_profile(h, -2.0);
    b += detail::sinsin(h) * 0.05;
    QuasiConfig c;
    c.delta_targets = {0.0};
    c.outer_tol = 1e-10;
    c.zeta_b = sample(h, [](double x, double y) { return x * x + 0.5 * y * y; });
    const auto r = solve_quasi(c, PotentialProblem(law, b), EpsilonSchedule{}, PicardParams{});
    if (r.states.empty()) {
      d = r.report.error;
      return false;
    }
    return detail::below(max_abs_diff(r.states[0].psi, r.phi), c.outer_tol, d);
  });
  return s.take();
}

inline std::vector<SuiteResult> run_all(std::uint64_t seed = 0) {
  return {gas_suite(),      field_suite(),     regime_suite(seed),     hodge_suite(),
          potential_suite(), vorticity_suite(), quasipotential_suite()};
}

}  // namespace selfsim::verify
