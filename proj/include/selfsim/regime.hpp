#pragma once

/// @file regime.hpp
/// @brief Characteristic eigenvalues, mixed-type classification and the
/// interior-maximum audit of the pseudo-Mach field.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/gas.hpp"

namespace selfsim {

inline constexpr double kDegeneracyTolerance = 1e-14;

/// Three characteristic speeds. When `complex_pair` is set, lambdas[0] and
/// lambdas[2] hold the common real part and `imag` the modulus of the
/// imaginary part; lambdas[1] is always real (NaN if undefined).
struct EigenTriple {
  std::array<double, 3> lambdas{};
  bool complex_pair = false;
  double imag = 0.0;
  bool degenerate = false;
};

inline EigenTriple eigen_time_dependent(double u, double v, double c, double alpha1, double alpha2) {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::Domain, "sound speed must be > 0");
  if (!(std::abs(std::hypot(alpha1, alpha2) - 1.0) <= 1e-12)) {
    fail(ErrorKind::Domain, "direction alpha must be a unit vector");
  }
  const double s = u * alpha1 + v * alpha2;
  return {{s - c, s, s + c}, false, 0.0, false};
}

namespace detail {

// lambda_{1,3} = (p q -+ c^2 sqrt(L^2 - 1)) / (c^2 - p^2), lambda_2 = q / p,
// with sqrt-argument written as c^2 (L^2 - 1) = p^2 + q^2 - c^2.
inline EigenTriple eigen_mixed(double p, double q, double c) {
  EigenTriple e;
  const double c2 = c * c;
  const double den = c2 - p * p;
  const double arg = p * p + q * q - c2;
  const bool den_zero = std::abs(den) <= kDegeneracyTolerance * c2;
  const bool p_zero = std::abs(p) <= kDegeneracyTolerance * c;
  e.degenerate = den_zero || p_zero;
  e.lambdas[1] = p_zero ? std::numeric_limits<double>::quiet_NaN() : q / p;
  if (den_zero) {
    e.lambdas[0] = e.lambdas[2] = std::numeric_limits<double>::quiet_NaN();
    e.complex_pair = arg < 0.0;
    return e;
  }
  if (arg < 0.0) {
    e.complex_pair = true;
    e.lambdas[0] = e.lambdas[2] = p * q / den;
    e.imag = std::abs(c * std::sqrt(-arg) / den);
    return e;
  }
  const double root = c * std::sqrt(arg);
  e.lambdas[0] = (p * q - root) / den;
  e.lambdas[2] = (p * q + root) / den;
  if (!e.degenerate) std::sort(e.lambdas.begin(), e.lambdas.end());
  return e;
}

}  // namespace detail

inline EigenTriple eigen_steady(double u, double v, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::Domain, "sound speed must be > 0");
  return detail::eigen_mixed(u, v, c);
}

inline EigenTriple eigen_self_similar(double U1, double U2, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) fail(ErrorKind::Domain, "sound speed must be > 0");
  return detail::eigen_mixed(U1, U2, c);
}

struct Discriminant {
  double disc;
  double check;
};

/// B^2 - 4AC of the normalized principal part and its closed form 4(L^2 - 1).
inline Discriminant discriminant(double phi1, double phi2, double c2) {
  if (!(c2 > 0.0) || !std::isfinite(c2)) fail(ErrorKind::Domain, "c2 must be > 0");
  const double A = 1.0 - phi1 * phi1 / c2;
  const double B = -2.0 * phi1 * phi2 / c2;
  const double C = 1.0 - phi2 * phi2 / c2;
  const double L2 = (phi1 * phi1 + phi2 * phi2) / c2;
  return {B * B - 4.0 * A * C, 4.0 * (L2 - 1.0)};
}

/// L^2 = |U|^2 / c^2 nodewise.
inline ScalarField pseudo_mach_field(const VectorField& U, const ScalarField& c2) {
  require_same_grid(U.grid(), c2.grid(), "pseudo_mach_field");
  return pointwise([](double u, double v, double c) { return (u * u + v * v) / c; }, U.u, U.v, c2);
}

enum class AuditVerdict { Pass, InteriorMaxViolation, IdenticallyZero };

inline std::string_view to_string(AuditVerdict v) {
  switch (v) {
    case AuditVerdict::Pass: return "Pass";
    case AuditVerdict::InteriorMaxViolation: return "InteriorMaxViolation";
    case AuditVerdict::IdenticallyZero: return "IdenticallyZero";
  }
  return "?";
}

struct AuditReport {
  AuditVerdict verdict = AuditVerdict::IdenticallyZero;
  double m_interior = 0.0;
  double m_frame = 0.0;
  double max_L2 = 0.0;
  NodeIndex argmax{};
  /// max |Db| and max |D^2 b| over the grid (zero without b).
  double b_grad_max = 0.0;
  double b_hess_max = 0.0;
};

/// Nodes with mask[k] != 0 are excluded from every statistic.
using NodeMask = std::vector<char>;

inline constexpr int kAuditFrameRings = 2;

inline AuditReport ellipticity_audit(const ScalarField& L2, const ScalarField* b = nullptr,
                                     double tol = 1e-10, const NodeMask* excluded = nullptr) {
  const Grid2D& g = L2.grid();
  if (b) require_same_grid(g, b->grid(), "ellipticity_audit");
  AuditReport r;
  r.m_interior = -std::numeric_limits<double>::infinity();
  r.m_frame = -std::numeric_limits<double>::infinity();
  double best = -std::numeric_limits<double>::infinity();
  r.max_L2 = 0.0;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (excluded && (*excluded)[k]) continue;
      const double val = L2[k] + (b ? (*b)[k] : 0.0);
      r.max_L2 = std::max(r.max_L2, std::abs(L2[k]));
      if (g.ring(i, j) >= kAuditFrameRings) {
        r.m_interior = std::max(r.m_interior, val);
      } else {
        r.m_frame = std::max(r.m_frame, val);
      }
      if (val > best) {
        best = val;
        r.argmax = {i, j};
      }
    }
  if (b) {
    const VectorField Db = gradient(*b);
    const Hessian Hb = hessian(*b);
    for (std::size_t k = 0; k < b->size(); ++k) {
      r.b_grad_max = std::max(r.b_grad_max, std::hypot(Db.u[k], Db.v[k]));
      const double fro = std::sqrt(Hb.f11[k] * Hb.f11[k] + 2.0 * Hb.f12[k] * Hb.f12[k] +
                                   Hb.f22[k] * Hb.f22[k]);
      r.b_hess_max = std::max(r.b_hess_max, fro);
    }
  }
  if (r.max_L2 <= tol) {
    r.verdict = AuditVerdict::IdenticallyZero;
  } else if (r.m_interior <= r.m_frame + tol) {
    r.verdict = AuditVerdict::Pass;
  } else {
    r.verdict = AuditVerdict::InteriorMaxViolation;
  }
  return r;
}

struct RegimeReport {
  std::vector<FlowRegime> regime_map;
  ScalarField L2;
  ScalarField discriminant;
  double max_L2 = 0.0;
  NodeIndex max_L2_at{};
  std::size_t subsonic = 0, sonic = 0, supersonic = 0, excluded = 0;
  AuditReport audit;
};

/// Pseudo-Mach classification of U against c^2. Nodes with c^2 <= 0 or
/// marked in `excluded` are left out of the counts and the audit.
inline RegimeReport classify(const VectorField& U, const ScalarField& c2,
                             double tol_sonic = kDefaultSonicTolerance,
                             const NodeMask* excluded = nullptr, double audit_tol = 1e-10) {
  require_same_grid(U.grid(), c2.grid(), "classify");
  const Grid2D& g = c2.grid();
  RegimeReport r;
  r.L2 = ScalarField(g);
  r.discriminant = ScalarField(g);
  r.regime_map.assign(g.size(), FlowRegime::Subsonic);
  NodeMask mask(g.size(), 0);
  r.max_L2 = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if ((excluded && (*excluded)[k]) || !(c2[k] > 0.0)) {
      mask[k] = 1;
      r.L2[k] = std::numeric_limits<double>::quiet_NaN();
      r.discriminant[k] = std::numeric_limits<double>::quiet_NaN();
      ++r.excluded;
      continue;
    }
    const Discriminant d = discriminant(U.u[k], U.v[k], c2[k]);
    const double L2 = (U.u[k] * U.u[k] + U.v[k] * U.v[k]) / c2[k];
    r.L2[k] = L2;
    r.discriminant[k] = d.disc;
    const FlowRegime reg = classify_ratio(std::sqrt(L2), tol_sonic);
    r.regime_map[k] = reg;
    (reg == FlowRegime::Subsonic ? r.subsonic : reg == FlowRegime::Sonic ? r.sonic : r.supersonic)++;
    if (L2 > r.max_L2) {
      r.max_L2 = L2;
      r.max_L2_at = {static_cast<int>(k % g.nx()), static_cast<int>(k / g.nx())};
    }
  }
  if (r.excluded == g.size()) r.max_L2 = std::numeric_limits<double>::quiet_NaN();
  r.audit = ellipticity_audit(r.L2, nullptr, audit_tol, &mask);
  return r;
}

}  // namespace selfsim
