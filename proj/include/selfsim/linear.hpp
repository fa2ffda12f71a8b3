#pragma once

/// @file linear.hpp
/// @brief Variable-coefficient second-order stencil operators and their
/// Dirichlet solves.
///
///   L v = a11 v_11 + a12 v_12 + a22 v_22 + b1 v_1 + b2 v_2 + c0 v
///
/// Interior nodes carry the 9-point stencil (5-point principal part plus the
/// 4-point cross for v_12); frame nodes are eliminated with their Dirichlet
/// values. The reduced system is factored with a sparse LU and polished by
/// iterative refinement until the relative residual meets the tolerance.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"

namespace selfsim {

struct StencilCoefficients {
  ScalarField a11, a12, a22, b1, b2, c0;

  explicit StencilCoefficients(const Grid2D& g)
      : a11(g), a12(g), a22(g), b1(g), b2(g), c0(g) {}
  const Grid2D& grid() const noexcept { return a11.grid(); }
};

/// Laplacian coefficients: a11 = a22 = 1, everything else zero.
inline StencilCoefficients laplace_coefficients(const Grid2D& g) {
  StencilCoefficients c(g);
  c.a11 = ScalarField(g, 1.0);
  c.a22 = ScalarField(g, 1.0);
  return c;
}

/// Smaller eigenvalue of the symmetric principal matrix [[a11, a12/2], [a12/2, a22]].
inline double principal_min_eigenvalue(double a11, double a12, double a22) {
  const double m = 0.5 * (a11 + a22);
  const double d = std::hypot(0.5 * (a11 - a22), 0.5 * a12);
  return m - d;
}

/// Min over interior nodes of the principal-part eigenvalue and where it occurs.
struct EllipticityProbe {
  double min_eigenvalue;
  NodeIndex at;
};

inline EllipticityProbe ellipticity_probe(const StencilCoefficients& c) {
  const Grid2D& g = c.grid();
  EllipticityProbe p{std::numeric_limits<double>::infinity(), {1, 1}};
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const double lam = principal_min_eigenvalue(c.a11(i, j), c.a12(i, j), c.a22(i, j));
      if (lam < p.min_eigenvalue || !std::isfinite(lam)) p = {lam, {i, j}};
    }
  return p;
}

namespace detail {

struct StencilWeights {
  // Offsets (di, dj) in {-1,0,1}^2, row-major over dj then di.
  double w[3][3];
};

inline StencilWeights stencil_at(const StencilCoefficients& c, int i, int j) {
  const Grid2D& g = c.grid();
  const double hx = g.hx(), hy = g.hy();
  const double ixx = 1.0 / (hx * hx), iyy = 1.0 / (hy * hy), ixy = 1.0 / (4.0 * hx * hy);
  const double ix = 1.0 / (2.0 * hx), iy = 1.0 / (2.0 * hy);
  const double a11 = c.a11(i, j), a12 = c.a12(i, j), a22 = c.a22(i, j);
  const double b1 = c.b1(i, j), b2 = c.b2(i, j), c0 = c.c0(i, j);
  StencilWeights s{};
  s.w[1][1] = -2.0 * a11 * ixx - 2.0 * a22 * iyy + c0;
  s.w[1][2] = a11 * ixx + b1 * ix;   // (i+1, j)
  s.w[1][0] = a11 * ixx - b1 * ix;   // (i-1, j)
  s.w[2][1] = a22 * iyy + b2 * iy;   // (i, j+1)
  s.w[0][1] = a22 * iyy - b2 * iy;   // (i, j-1)
  s.w[2][2] = a12 * ixy;
  s.w[0][0] = a12 * ixy;
  s.w[2][0] = -a12 * ixy;
  s.w[0][2] = -a12 * ixy;
  return s;
}

}  // namespace detail

/// Applies L at interior nodes; frame values of the result are zero.
inline ScalarField apply_stencil(const StencilCoefficients& c, const ScalarField& v) {
  const Grid2D& g = c.grid();
  require_same_grid(g, v.grid(), "apply_stencil");
  ScalarField out(g);
  for (int j = 1; j < g.ny() - 1; ++j)
    for (int i = 1; i < g.nx() - 1; ++i) {
      const auto s = detail::stencil_at(c, i, j);
      double acc = 0.0;
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) acc += s.w[dj + 1][di + 1] * v(i + di, j + dj);
      out(i, j) = acc;
    }
  return out;
}

struct LinearOptions {
  double lin_tol = 1e-11;
  /// Upper bound on refinement sweeps after the factorization.
  int max_iters = 8;
  /// Principal eigenvalue below which a node counts as non-elliptic.
  double ellipticity_floor = 0.0;
};

struct LinearReport {
  double rel_residual = 0.0;
  int refinements = 0;
  std::vector<double> history;
};

/// Dirichlet solver that keeps the sparsity analysis across calls on one grid.
class DirichletSolver {
 public:
  explicit DirichletSolver(LinearOptions opts = {}) : opts_(opts) {}

  const LinearOptions& options() const noexcept { return opts_; }
  void set_options(const LinearOptions& o) { opts_ = o; }

  /// Solves L v = rhs at interior nodes with v = boundary on the frame.
  /// Interior values of `boundary` are ignored.
  ScalarField solve(const StencilCoefficients& c, const ScalarField& rhs, const ScalarField& boundary,
                    LinearReport* report = nullptr) {
    const Grid2D& g = c.grid();
    require_same_grid(g, rhs.grid(), "DirichletSolver rhs");
    require_same_grid(g, boundary.grid(), "DirichletSolver boundary");

    const EllipticityProbe probe = ellipticity_probe(c);
    if (!(probe.min_eigenvalue > opts_.ellipticity_floor)) {
      std::ostringstream os;
      os << "principal part loses ellipticity at node (" << probe.at.i << ", " << probe.at.j
         << "), min eigenvalue " << probe.min_eigenvalue;
      fail(ErrorKind::IndefiniteSystem, os.str());
    }

    const int mx = g.nx() - 2, my = g.ny() - 2;
    const int n = mx * my;
    auto unknown = [mx](int i, int j) { return (j - 1) * mx + (i - 1); };

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 9);
    Eigen::VectorXd b(n);
    for (int j = 1; j <= my; ++j)
      for (int i = 1; i <= mx; ++i) {
        const int row = unknown(i, j);
        const auto s = detail::stencil_at(c, i, j);
        double r = rhs(i, j);
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const int ii = i + di, jj = j + dj;
            const double w = s.w[dj + 1][di + 1];
            if (g.on_boundary(ii, jj)) {
              r -= w * boundary(ii, jj);
            } else {
              trip.emplace_back(row, unknown(ii, jj), w);
            }
          }
        b[row] = r;
      }

    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();

    if (!analyzed_ || n_ != n) {
      lu_.analyzePattern(A);
      analyzed_ = true;
      n_ = n;
    }
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success) {
      fail(ErrorKind::IndefiniteSystem, "sparse LU factorization failed: " + lu_.lastErrorMessage());
    }

    const double bnorm = b.norm();
    const double scale = bnorm > 0.0 ? bnorm : 1.0;
    Eigen::VectorXd x = lu_.solve(b);
    Eigen::VectorXd r = b - A * x;
    double rel = r.norm() / scale;
    LinearReport rep;
    rep.history.push_back(rel);
    int sweeps = 0;
    while (!(rel <= opts_.lin_tol) && sweeps < opts_.max_iters) {
      x += lu_.solve(r);
      r = b - A * x;
      const double next = r.norm() / scale;
      rep.history.push_back(next);
      ++sweeps;
      if (!(next < rel)) {
        rel = next;
        break;
      }
      rel = next;
    }
    rep.rel_residual = rel;
    rep.refinements = sweeps;
    if (report) *report = rep;
    if (!std::isfinite(rel) || rel > opts_.lin_tol) {
      std::ostringstream os;
      os << "relative residual " << rel << " above lin_tol " << opts_.lin_tol << " after "
         << sweeps << " refinement sweeps";
      fail(ErrorKind::LinearStagnation, os.str());
    }

    ScalarField v(g);
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        v(i, j) = g.on_boundary(i, j) ? boundary(i, j) : x[unknown(i, j)];
    return v;
  }

 private:
  LinearOptions opts_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
  int n_ = -1;
};

/// One-shot convenience wrapper.
inline ScalarField solve_dirichlet(const StencilCoefficients& c, const ScalarField& rhs,
                                   const ScalarField& boundary, const LinearOptions& opts = {},
                                   LinearReport* report = nullptr) {
  DirichletSolver s(opts);
  return s.solve(c, rhs, boundary, report);
}

/// Delta v = rhs with v = boundary on the frame.
inline ScalarField solve_poisson_dirichlet(const ScalarField& rhs, const ScalarField& boundary,
                                           const LinearOptions& opts = {},
                                           LinearReport* report = nullptr) {
  return solve_dirichlet(laplace_coefficients(rhs.grid()), rhs, boundary, opts, report);
}

}  // namespace selfsim
