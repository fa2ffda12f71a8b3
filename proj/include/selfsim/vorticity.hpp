#pragma once

/// @file vorticity.hpp
/// @brief Vorticity transport b . grad(omega) = -omega (1 + div b) with b = grad psi,
/// solved along characteristics:
///
///   d xi / dr = b(xi),   omega(r) = omega(xi_b) exp(-int_0^r (1 + div b) ds).
///
/// Every node is traced backward (d xi / dr = -b) to the inflow boundary; the
/// exponent integral is carried as an extra RK4 component.

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <functional>
#include <sstream>
#include <string_view>
#include <thread>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/regime.hpp"

namespace selfsim {

inline constexpr double kStagnationSpeed = 1e-10;

struct DriftField {
  VectorField b;
  ScalarField div_b;
};

inline DriftField make_drift(const ScalarField& psi) { return {gradient(psi), laplacian(psi)}; }

/// Outward unit normal of a frame node; corners use the normalized diagonal.
inline Point frame_normal(const Grid2D& g, int i, int j) {
  const double nx = i == 0 ? -1.0 : (i == g.nx() - 1 ? 1.0 : 0.0);
  const double ny = j == 0 ? -1.0 : (j == g.ny() - 1 ? 1.0 : 0.0);
  const double n = std::hypot(nx, ny);
  return {nx / n, ny / n};
}

/// Frame nodes where b . nu < -tol, plus omega data on the whole frame.
struct InflowSet {
  std::vector<NodeIndex> nodes;
  NodeMask mask;
  /// Boundary values; only frame entries are read.
  ScalarField values;

  bool empty() const noexcept { return nodes.empty(); }
  bool contains(int i, int j) const { return mask[values.grid().index(i, j)] != 0; }
};

inline InflowSet inflow_boundary(const ScalarField& psi, double tol_inflow = 1e-12) {
  const Grid2D& g = psi.grid();
  const VectorField b = gradient(psi);
  InflowSet s;
  s.mask.assign(g.size(), 0);
  s.values = ScalarField(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.on_boundary(i, j)) continue;
      const Point nu = frame_normal(g, i, j);
      const std::size_t k = g.index(i, j);
      if (b.u[k] * nu.x + b.v[k] * nu.y < -tol_inflow) {
        s.nodes.push_back({i, j});
        s.mask[k] = 1;
      }
    }
  return s;
}

/// Fills frame values from omega_b(x, y).
template <class Fn>
void assign_inflow_values(InflowSet& s, Fn&& omega_b) {
  const Grid2D& g = s.values.grid();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (g.on_boundary(i, j)) s.values(i, j) = omega_b(g.x(i), g.y(j));
}

/// Copies frame values from a nodal field.
inline void assign_inflow_values(InflowSet& s, const ScalarField& frame) {
  require_same_grid(s.values.grid(), frame.grid(), "assign_inflow_values");
  const Grid2D& g = frame.grid();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      if (g.on_boundary(i, j)) s.values(i, j) = frame(i, j);
}

enum class TraceEnd { LeftDomain, MaxLength, Stagnation };

inline std::string_view to_string(TraceEnd e) {
  switch (e) {
    case TraceEnd::LeftDomain: return "LeftDomain";
    case TraceEnd::MaxLength: return "MaxLength";
    case TraceEnd::Stagnation: return "Stagnation";
  }
  return "?";
}

struct CharacteristicTrace {
  Point start;
  std::vector<Point> nodes;
  std::vector<double> r;
  /// int_0^r (1 + div b) ds at each recorded node.
  std::vector<double> accumulated;
  TraceEnd terminated = TraceEnd::MaxLength;

  Point end() const { return nodes.back(); }
  double length() const { return r.back(); }
  double integral() const { return accumulated.back(); }
};

namespace detail {

struct TraceState {
  double x, y, I;
};

inline TraceState trace_rhs(const DriftField& d, const TraceState& s, double dir) {
  const Point p{s.x, s.y};
  return {dir * interpolate(d.b.u, p), dir * interpolate(d.b.v, p), 1.0 + interpolate(d.div_b, p)};
}

inline TraceState rk4(const DriftField& d, const TraceState& s, double h, double dir) {
  const TraceState k1 = trace_rhs(d, s, dir);
  const TraceState k2 = trace_rhs(d, {s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y, 0.0}, dir);
  const TraceState k3 = trace_rhs(d, {s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y, 0.0}, dir);
  const TraceState k4 = trace_rhs(d, {s.x + h * k3.x, s.y + h * k3.y, 0.0}, dir);
  return {s.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
          s.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
          s.I + h / 6.0 * (k1.I + 2.0 * k2.I + 2.0 * k3.I + k4.I)};
}

inline double geometric_slack(const Grid2D& g) { return 1e-12 * g.diameter(); }

}  // namespace detail

/// RK4 integration of d xi / dr = direction * b(xi) from `start`. Stops when the
/// path leaves the rectangle (the exit point is located on the frame by
/// bisection of the last step), when r reaches max_len, or when |b| < 1e-10.
inline CharacteristicTrace trace_characteristic(const DriftField& drift, Point start, double step,
                                                double max_len, double direction = 1.0,
                                                bool record = true) {
  const Grid2D& g = drift.b.grid();
  if (!(step > 0.0) || !(max_len > 0.0)) fail(ErrorKind::Config, "step and max_len must be > 0");
  const double slack = detail::geometric_slack(g);
  if (!g.contains(start, slack)) {
    fail(ErrorKind::InterpolationOutOfRange, "characteristic start lies outside the grid");
  }
  CharacteristicTrace t;
  t.start = start;
  detail::TraceState s{start.x, start.y, 0.0};
  double r = 0.0;
  auto push = [&](bool force) {
    if (record || force) {
      t.nodes.push_back({s.x, s.y});
      t.r.push_back(r);
      t.accumulated.push_back(s.I);
    }
  };
  push(true);
  for (;;) {
    const Point p{s.x, s.y};
    if (std::hypot(interpolate(drift.b.u, p), interpolate(drift.b.v, p)) < kStagnationSpeed) {
      t.terminated = TraceEnd::Stagnation;
      break;
    }
    if (r >= max_len) {
      t.terminated = TraceEnd::MaxLength;
      break;
    }
    const double h = std::min(step, max_len - r);
    detail::TraceState next = detail::rk4(drift, s, h, direction);
    if (g.contains({next.x, next.y}, slack)) {
      s = next;
      r += h;
      if (r >= max_len) r = max_len;
      push(false);
      continue;
    }
    double lo = 0.0, hi = h;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      const detail::TraceState m = detail::rk4(drift, s, mid, direction);
      (g.contains({m.x, m.y}, slack) ? lo : hi) = mid;
    }
    s = detail::rk4(drift, s, lo, direction);
    s.x = std::clamp(s.x, g.x0(), g.x1());
    s.y = std::clamp(s.y, g.y0(), g.y1());
    r += lo;
    t.terminated = TraceEnd::LeftDomain;
    break;
  }
  if (t.nodes.empty() || t.r.back() != r || !record) {
    if (!record) {
      t.nodes.clear();
      t.r.clear();
      t.accumulated.clear();
      t.nodes.push_back(start);
      t.r.push_back(0.0);
      t.accumulated.push_back(0.0);
    }
    t.nodes.push_back({s.x, s.y});
    t.r.push_back(r);
    t.accumulated.push_back(s.I);
  }
  return t;
}

/// Linear interpolation of frame values at a point on the frame.
inline double frame_value(const ScalarField& values, Point p) {
  const Grid2D& g = values.grid();
  const double tol = 1e-9 * std::min(g.hx(), g.hy());
  auto along = [&](bool horizontal, int fixed) {
    if (horizontal) {
      const double s = std::clamp((p.x - g.x0()) / g.hx(), 0.0, g.nx() - 1.0);
      const int i = std::min(static_cast<int>(std::floor(s)), g.nx() - 2);
      const double t = s - i;
      return (1.0 - t) * values(i, fixed) + t * values(i + 1, fixed);
    }
    const double s = std::clamp((p.y - g.y0()) / g.hy(), 0.0, g.ny() - 1.0);
    const int j = std::min(static_cast<int>(std::floor(s)), g.ny() - 2);
    const double t = s - j;
    return (1.0 - t) * values(fixed, j) + t * values(fixed, j + 1);
  };
  if (std::abs(p.y - g.y0()) <= tol) return along(true, 0);
  if (std::abs(p.y - g.y1()) <= tol) return along(true, g.ny() - 1);
  if (std::abs(p.x - g.x0()) <= tol) return along(false, 0);
  if (std::abs(p.x - g.x1()) <= tol) return along(false, g.nx() - 1);
  fail(ErrorKind::Internal, "exit point is not on the frame");
}

struct TransportParams {
  /// RK4 step in r; 0 selects min(hx, hy) / 4.
  double step = 0.0;
  /// Trace length cap in r; 0 selects 100.
  double max_len = 0.0;
  /// Worker threads for per-node traces (results do not depend on it).
  int threads = 1;
  /// Raise UncoveredNodes instead of zero-filling.
  bool strict = false;
};

struct TransportResult {
  ScalarField omega;
  std::size_t uncovered = 0;
  NodeMask uncovered_mask;
  double max_trace_length = 0.0;
};

inline TransportResult transport_omega(const ScalarField& psi, const InflowSet& inflow,
                                       const TransportParams& params = {}) {
  const Grid2D& g = psi.grid();
  require_same_grid(g, inflow.values.grid(), "transport_omega");
  const DriftField drift = make_drift(psi);
  const double step = params.step > 0.0 ? params.step : 0.25 * std::min(g.hx(), g.hy());
  const double max_len = params.max_len > 0.0 ? params.max_len : 100.0;

  TransportResult out;
  out.omega = ScalarField(g);
  out.uncovered_mask.assign(g.size(), 0);
  std::vector<double> lengths(g.size(), 0.0);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const int i = static_cast<int>(k % g.nx()), j = static_cast<int>(k / g.nx());
      if (inflow.mask[k]) {
        out.omega[k] = inflow.values[k];
        continue;
      }
      const CharacteristicTrace t = trace_characteristic(drift, g.node(i, j), step, max_len, -1.0, false);
      lengths[k] = t.length();
      if (t.terminated != TraceEnd::LeftDomain) {
        out.uncovered_mask[k] = 1;
        out.omega[k] = 0.0;
        continue;
      }
      out.omega[k] = frame_value(inflow.values, t.end()) * std::exp(-t.integral());
    }
  };

  const int threads = std::max(1, params.threads);
  if (threads == 1) {
    work(0, g.size());
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (g.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t b = std::min(g.size(), t * chunk), e = std::min(g.size(), b + chunk);
      pool.emplace_back([&, t, b, e] {
        try {
          work(b, e);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& ep : errors)
      if (ep) std::rethrow_exception(ep);
  }

  for (std::size_t k = 0; k < g.size(); ++k) {
    out.uncovered += out.uncovered_mask[k];
    out.max_trace_length = std::max(out.max_trace_length, lengths[k]);
  }
  if (params.strict && out.uncovered > 0) {
    std::ostringstream os;
    os << out.uncovered << " node(s) are not reached by characteristics from the inflow boundary";
    fail(ErrorKind::UncoveredNodes, os.str());
  }
  return out;
}

/// U . grad(omega) + omega (1 + div U) at interior nodes, the characteristic
/// form of div(omega U) + omega; zero on the frame.
inline ScalarField transport_residual(const ScalarField& omega, const VectorField& U) {
  require_same_grid(omega.grid(), U.grid(), "transport_residual");
  const VectorField Dw = gradient(omega);
  const ScalarField divU = divergence(U);
  ScalarField r(omega.grid());
  const Grid2D& g = omega.grid();
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const std::size_t k = g.index(i, j);
      r[k] = U.u[k] * Dw.u[k] + U.v[k] * Dw.v[k] + omega[k] * (1.0 + divU[k]);
    }
  return r;
}

}  // namespace selfsim
