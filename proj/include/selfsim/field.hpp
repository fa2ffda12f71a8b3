#pragma once

/// @file field.hpp
/// @brief Uniform node-centered grid in self-similar coordinates and
/// second-order finite-difference calculus on scalar and vector fields.
///
/// Stencil discipline:
///  - first derivatives: centered in the interior, second-order one-sided on
///    the boundary ring;
///  - pure second derivatives: 3-point centered, 3-point one-sided (first
///    order) on the ring;
///  - mixed derivative: d2(d1 f), which is the 4-point cross at interior nodes.
/// All difference operators are exact on quadratics. Interior identities such
/// as rot(grad f) = 0 and div(perp_grad z) = 0 hold because the transverse
/// derivative at every node adjacent to the ring is centered.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"

namespace selfsim {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct NodeIndex {
  int i = 0;
  int j = 0;
  friend bool operator==(const NodeIndex&, const NodeIndex&) = default;
};

class Grid2D {
 public:
  Grid2D() = default;

  Grid2D(double x0, double x1, double y0, double y1, int nx, int ny)
      : x0_(x0), x1_(x1), y0_(y0), y1_(y1), nx_(nx), ny_(ny) {
    if (!(std::isfinite(x0) && std::isfinite(x1) && std::isfinite(y0) && std::isfinite(y1))) {
      fail(ErrorKind::Domain, "grid bounds must be finite");
    }
    if (!(x1 > x0) || !(y1 > y0)) fail(ErrorKind::Domain, "grid requires x1 > x0 and y1 > y0");
    if (nx < 3 || ny < 3) fail(ErrorKind::Domain, "grid requires at least 3 nodes per axis");
    hx_ = (x1 - x0) / (nx - 1);
    hy_ = (y1 - y0) / (ny - 1);
  }

  double x0() const noexcept { return x0_; }
  double x1() const noexcept { return x1_; }
  double y0() const noexcept { return y0_; }
  double y1() const noexcept { return y1_; }
  int nx() const noexcept { return nx_; }
  int ny() const noexcept { return ny_; }
  double hx() const noexcept { return hx_; }
  double hy() const noexcept { return hy_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(nx_) * ny_; }

  double x(int i) const noexcept { return i == nx_ - 1 ? x1_ : x0_ + i * hx_; }
  double y(int j) const noexcept { return j == ny_ - 1 ? y1_ : y0_ + j * hy_; }
  Point node(int i, int j) const noexcept { return {x(i), y(j)}; }

  /// Row-major: y rows outer, x inner.
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  bool on_boundary(int i, int j) const noexcept {
    return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1;
  }
  /// Distance (in rings) from the frame: 0 on the boundary.
  int ring(int i, int j) const noexcept {
    return std::min(std::min(i, nx_ - 1 - i), std::min(j, ny_ - 1 - j));
  }

  bool contains(Point p, double slack = 0.0) const noexcept {
    return p.x >= x0_ - slack && p.x <= x1_ + slack && p.y >= y0_ - slack && p.y <= y1_ + slack;
  }

  double diameter() const noexcept { return std::hypot(x1_ - x0_, y1_ - y0_); }

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.nx_ == b.nx_ && a.ny_ == b.ny_ && a.x0_ == b.x0_ && a.x1_ == b.x1_ &&
           a.y0_ == b.y0_ && a.y1_ == b.y1_;
  }

 private:
  double x0_ = 0.0, x1_ = 1.0, y0_ = 0.0, y1_ = 1.0;
  int nx_ = 3, ny_ = 3;
  double hx_ = 0.5, hy_ = 0.5;
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b, const char* what) {
  if (!(a == b)) fail(ErrorKind::DimensionMismatch, std::string(what) + ": fields live on different grids");
}

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid2D& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {}
  ScalarField(const Grid2D& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      std::ostringstream os;
      os << "expected " << grid_.size() << " values, got " << values_.size();
      fail(ErrorKind::DimensionMismatch, os.str());
    }
  }

  const Grid2D& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  ScalarField& operator+=(const ScalarField& o) {
    require_same_grid(grid_, o.grid_, "operator+=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    require_same_grid(grid_, o.grid_, "operator-=");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }

 private:
  Grid2D grid_;
  std::vector<double> values_;
};

struct VectorField {
  ScalarField u;
  ScalarField v;

  VectorField() = default;
  explicit VectorField(const Grid2D& grid) : u(grid), v(grid) {}
  VectorField(ScalarField u_, ScalarField v_) : u(std::move(u_)), v(std::move(v_)) {
    require_same_grid(u.grid(), v.grid(), "VectorField");
  }
  const Grid2D& grid() const noexcept { return u.grid(); }

  VectorField& operator+=(const VectorField& o) {
    u += o.u;
    v += o.v;
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    u -= o.u;
    v -= o.v;
    return *this;
  }
  VectorField& operator*=(double s) {
    u *= s;
    v *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }
  friend VectorField operator*(VectorField a, double s) { return a *= s; }
};

/// Sample f(x, y) at every node.
template <class Fn>
ScalarField sample(const Grid2D& grid, Fn&& fn) {
  ScalarField f(grid);
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i) f(i, j) = fn(grid.x(i), grid.y(j));
  return f;
}

template <class FnU, class FnV>
VectorField sample(const Grid2D& grid, FnU&& fu, FnV&& fv) {
  return VectorField(sample(grid, fu), sample(grid, fv));
}

/// Nodewise combination of any number of same-grid fields.
template <class Fn, class... Fields>
ScalarField pointwise(Fn&& fn, const ScalarField& first, const Fields&... rest) {
  (require_same_grid(first.grid(), rest.grid(), "pointwise"), ...);
  ScalarField out(first.grid());
  for (std::size_t k = 0; k < first.size(); ++k) out[k] = fn(first[k], rest[k]...);
  return out;
}

// ---------------------------------------------------------------------------
// Derivatives

namespace detail {

// d/dx along one row (or column) of n samples spaced h, read through stride.
inline void diff1(const double* f, std::ptrdiff_t stride, int n, double h, double* out) {
  const double inv2h = 1.0 / (2.0 * h);
  out[0] = (-3.0 * f[0] + 4.0 * f[stride] - f[2 * stride]) * inv2h;
  for (int k = 1; k < n - 1; ++k) {
    out[k * stride] = (f[(k + 1) * stride] - f[(k - 1) * stride]) * inv2h;
  }
  const std::ptrdiff_t l = static_cast<std::ptrdiff_t>(n - 1) * stride;
  out[l] = (3.0 * f[l] - 4.0 * f[l - stride] + f[l - 2 * stride]) * inv2h;
}

inline void diff2(const double* f, std::ptrdiff_t stride, int n, double h, double* out) {
  const double invh2 = 1.0 / (h * h);
  out[0] = (f[0] - 2.0 * f[stride] + f[2 * stride]) * invh2;
  for (int k = 1; k < n - 1; ++k) {
    out[k * stride] = (f[(k + 1) * stride] - 2.0 * f[k * stride] + f[(k - 1) * stride]) * invh2;
  }
  const std::ptrdiff_t l = static_cast<std::ptrdiff_t>(n - 1) * stride;
  out[l] = (f[l] - 2.0 * f[l - stride] + f[l - 2 * stride]) * invh2;
}

}  // namespace detail

/// d f / d xi_1
inline ScalarField d1(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny(); ++j) {
    const std::size_t row = g.index(0, j);
    detail::diff1(f.values().data() + row, 1, g.nx(), g.hx(), out.values().data() + row);
  }
  return out;
}

/// d f / d xi_2
inline ScalarField d2(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int i = 0; i < g.nx(); ++i) {
    detail::diff1(f.values().data() + i, g.nx(), g.ny(), g.hy(), out.values().data() + i);
  }
  return out;
}

inline ScalarField d11(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int j = 0; j < g.ny(); ++j) {
    const std::size_t row = g.index(0, j);
    detail::diff2(f.values().data() + row, 1, g.nx(), g.hx(), out.values().data() + row);
  }
  return out;
}

inline ScalarField d22(const ScalarField& f) {
  const Grid2D& g = f.grid();
  ScalarField out(g);
  for (int i = 0; i < g.nx(); ++i) {
    detail::diff2(f.values().data() + i, g.nx(), g.ny(), g.hy(), out.values().data() + i);
  }
  return out;
}

inline ScalarField d12(const ScalarField& f) { return d2(d1(f)); }

inline VectorField gradient(const ScalarField& f) { return VectorField(d1(f), d2(f)); }

struct Hessian {
  ScalarField f11;
  ScalarField f12;
  ScalarField f22;
};

inline Hessian hessian(const ScalarField& f) { return {d11(f), d12(f), d22(f)}; }

inline ScalarField divergence(const VectorField& V) { return d1(V.u) + d2(V.v); }

/// 5-point Laplacian at interior nodes (f11 + f22 everywhere).
inline ScalarField laplacian(const ScalarField& f) { return d11(f) + d22(f); }

/// rot V = dV^2/dxi_1 - dV^1/dxi_2
inline ScalarField rot(const VectorField& V) { return d1(V.v) - d2(V.u); }

/// perp_grad z = (-z_2, z_1)
inline VectorField perp_gradient(const ScalarField& z) {
  ScalarField zy = d2(z);
  zy *= -1.0;
  return VectorField(std::move(zy), d1(z));
}

/// V^perp = (-V^2, V^1)
inline VectorField perp(const VectorField& V) {
  ScalarField mv = V.v;
  mv *= -1.0;
  return VectorField(std::move(mv), V.u);
}

inline ScalarField dot(const VectorField& a, const VectorField& b) {
  return pointwise([](double au, double av, double bu, double bv) { return au * bu + av * bv; },
                   a.u, a.v, b.u, b.v);
}

inline ScalarField norm_sq(const VectorField& a) { return dot(a, a); }

inline ScalarField product(const ScalarField& a, const ScalarField& b) {
  return pointwise([](double x, double y) { return x * y; }, a, b);
}

inline VectorField scale(const ScalarField& s, const VectorField& V) {
  return VectorField(product(s, V.u), product(s, V.v));
}

/// Bilinear form x^T H y with a nodal symmetric Hessian.
inline ScalarField hessian_form(const Hessian& H, const VectorField& x, const VectorField& y) {
  ScalarField out(H.f11.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = H.f11[k] * x.u[k] * y.u[k] + H.f12[k] * (x.u[k] * y.v[k] + x.v[k] * y.u[k]) +
             H.f22[k] * x.v[k] * y.v[k];
  }
  return out;
}

/// Jacobian of a vector field, J(i, j) = d V^i / d xi_j.
struct Jacobian {
  ScalarField j11, j12, j21, j22;
};

inline Jacobian jacobian(const VectorField& V) { return {d1(V.u), d2(V.u), d1(V.v), d2(V.v)}; }

/// (J a) . b
inline ScalarField jacobian_form(const Jacobian& J, const VectorField& a, const VectorField& b) {
  ScalarField out(J.j11.grid());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double ja1 = J.j11[k] * a.u[k] + J.j12[k] * a.v[k];
    const double ja2 = J.j21[k] * a.u[k] + J.j22[k] * a.v[k];
    out[k] = ja1 * b.u[k] + ja2 * b.v[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Norms and reductions. Loops run in fixed node order.

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Max |f| over nodes at least `rings` away from the frame (rings = 1: interior).
inline double max_abs_interior(const ScalarField& f, int rings = 1) {
  const Grid2D& g = f.grid();
  double m = 0.0;
  for (int j = rings; j < g.ny() - rings; ++j)
    for (int i = rings; i < g.nx() - rings; ++i) m = std::max(m, std::abs(f(i, j)));
  return m;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs_diff_interior(const ScalarField& a, const ScalarField& b, int rings = 1) {
  return max_abs_interior(a - b, rings);
}

inline double mean(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

inline double min_value(const ScalarField& f) {
  double m = std::numeric_limits<double>::infinity();
  for (double v : f.values()) m = std::min(m, v);
  return m;
}

inline double max_value(const ScalarField& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : f.values()) m = std::max(m, v);
  return m;
}

inline bool all_finite(const ScalarField& f) {
  return std::all_of(f.values().begin(), f.values().end(),
                     [](double v) { return std::isfinite(v); });
}

/// Zero the boundary ring in place.
inline ScalarField& zero_boundary(ScalarField& f) {
  const Grid2D& g = f.grid();
  for (int i = 0; i < g.nx(); ++i) f(i, 0) = f(i, g.ny() - 1) = 0.0;
  for (int j = 0; j < g.ny(); ++j) f(0, j) = f(g.nx() - 1, j) = 0.0;
  return f;
}

// ---------------------------------------------------------------------------
// Bilinear interpolation

/// Evaluates a nodal field at an arbitrary point. Points up to `slack_cells`
/// cells outside the rectangle are linearly extrapolated from the edge cell.
inline double interpolate(const ScalarField& f, Point p, double slack_cells = 1.0) {
  const Grid2D& g = f.grid();
  const double sx = (p.x - g.x0()) / g.hx();
  const double sy = (p.y - g.y0()) / g.hy();
  if (!(sx >= -slack_cells && sx <= g.nx() - 1 + slack_cells && sy >= -slack_cells &&
        sy <= g.ny() - 1 + slack_cells)) {
    std::ostringstream os;
    os << "point (" << p.x << ", " << p.y << ") is outside the interpolation range";
    fail(ErrorKind::InterpolationOutOfRange, os.str());
  }
  const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, g.nx() - 2);
  const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, g.ny() - 2);
  const double tx = sx - i;
  const double ty = sy - j;
  return (1.0 - tx) * (1.0 - ty) * f(i, j) + tx * (1.0 - ty) * f(i + 1, j) +
         (1.0 - tx) * ty * f(i, j + 1) + tx * ty * f(i + 1, j + 1);
}

}  // namespace selfsim
