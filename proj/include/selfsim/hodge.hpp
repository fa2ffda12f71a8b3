#pragma once

/// @file hodge.hpp
/// @brief Hodge-Helmholtz splitting U = grad psi + W, stream functions,
/// the Bernoulli pair (G, H) and line-integral reconstruction of F.
///
/// The discrete Neumann problem is posed with the same difference operators
/// that later evaluate div W:
///   interior:  div(grad psi) = div U
///   frame:     grad psi . nu = U . nu   (corners: normalized diagonal normal)
/// This square system has only constants in its null space. It is bordered
/// with a zero-mean row and a multiplier column acting on the frame rows,
/// which absorbs any incompatibility of the data.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/gas.hpp"
#include "selfsim/linear.hpp"

namespace selfsim {

struct Decomposition {
  ScalarField psi;
  VectorField W;
  /// max |U - grad psi - W|; zero by construction.
  double residual = 0.0;
  /// max |div W| over interior nodes.
  double div_W_norm = 0.0;
  /// Multiplier of the compatibility column.
  double compatibility = 0.0;
  double rel_residual = 0.0;
};

namespace detail {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// First-derivative operator matching detail::diff1 along one axis.
inline SpMat derivative_matrix(const Grid2D& g, bool along_x) {
  const int n = along_x ? g.nx() : g.ny();
  const double h = along_x ? g.hx() : g.hy();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.size() * 3);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const int row = static_cast<int>(g.index(i, j));
      const int k = along_x ? i : j;
      auto col = [&](int kk) {
        return static_cast<int>(along_x ? g.index(kk, j) : g.index(i, kk));
      };
      const double inv2h = 1.0 / (2.0 * h);
      if (k == 0) {
        t.emplace_back(row, col(0), -3.0 * inv2h);
        t.emplace_back(row, col(1), 4.0 * inv2h);
        t.emplace_back(row, col(2), -1.0 * inv2h);
      } else if (k == n - 1) {
        t.emplace_back(row, col(n - 1), 3.0 * inv2h);
        t.emplace_back(row, col(n - 2), -4.0 * inv2h);
        t.emplace_back(row, col(n - 3), 1.0 * inv2h);
      } else {
        t.emplace_back(row, col(k + 1), inv2h);
        t.emplace_back(row, col(k - 1), -inv2h);
      }
    }
  SpMat D(static_cast<int>(g.size()), static_cast<int>(g.size()));
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

inline Point outward_normal(const Grid2D& g, int i, int j) {
  const double nx = i == 0 ? -1.0 : (i == g.nx() - 1 ? 1.0 : 0.0);
  const double ny = j == 0 ? -1.0 : (j == g.ny() - 1 ? 1.0 : 0.0);
  const double n = std::hypot(nx, ny);
  return {nx / n, ny / n};
}

}  // namespace detail

inline Decomposition decompose(const VectorField& U, const LinearOptions& opts = {}) {
  const Grid2D& g = U.grid();
  const int N = static_cast<int>(g.size());
  const detail::SpMat D1 = detail::derivative_matrix(g, true);
  const detail::SpMat D2 = detail::derivative_matrix(g, false);
  const detail::SpMat Lap = D1 * D1 + D2 * D2;

  const ScalarField divU = divergence(U);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(Lap.nonZeros()) + 4 * N);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N + 1);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const int row = static_cast<int>(g.index(i, j));
      if (!g.on_boundary(i, j)) {
        for (detail::SpMat::InnerIterator it(Lap, row); it; ++it) t.emplace_back(row, it.col(), it.value());
        b[row] = divU[row];
      } else {
        const Point nu = detail::outward_normal(g, i, j);
        for (detail::SpMat::InnerIterator it(D1, row); it; ++it) t.emplace_back(row, it.col(), nu.x * it.value());
        for (detail::SpMat::InnerIterator it(D2, row); it; ++it) t.emplace_back(row, it.col(), nu.y * it.value());
        t.emplace_back(row, N, 1.0);
        b[row] = nu.x * U.u[row] + nu.y * U.v[row];
      }
      t.emplace_back(N, row, 1.0 / N);
    }
  Eigen::SparseMatrix<double> K(N + 1, N + 1);
  K.setFromTriplets(t.begin(), t.end());
  K.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) {
    fail(ErrorKind::Solver, "Neumann system factorization failed: " + lu.lastErrorMessage());
  }
  const double scale = b.norm() > 0.0 ? b.norm() : 1.0;
  Eigen::VectorXd x = lu.solve(b);
  Eigen::VectorXd r = b - K * x;
  double rel = r.norm() / scale;
  for (int sweep = 0; sweep < opts.max_iters && !(rel <= opts.lin_tol); ++sweep) {
    x += lu.solve(r);
    r = b - K * x;
    const double next = r.norm() / scale;
    if (!(next < rel)) {
      rel = next;
      break;
    }
    rel = next;
  }
  if (!std::isfinite(rel) || rel > opts.lin_tol) {
    std::ostringstream os;
    os << "Neumann solve stagnated at relative residual " << rel;
    fail(ErrorKind::Solver, os.str());
  }

  Decomposition d;
  d.psi = ScalarField(g, std::vector<double>(x.data(), x.data() + N));
  d.compatibility = x[N];
  d.rel_residual = rel;
  d.W = U - gradient(d.psi);
  d.residual = std::max(max_abs_diff(U.u, gradient(d.psi).u + d.W.u),
                        max_abs_diff(U.v, gradient(d.psi).v + d.W.v));
  d.div_W_norm = max_abs_interior(divergence(d.W));
  return d;
}

struct StreamFunction {
  ScalarField zeta;
  /// max interior |perp_grad zeta - W|.
  double mismatch = 0.0;
};

/// Solves Delta zeta = rot W with zeta = 0 on the frame.
inline StreamFunction stream_function(const VectorField& W, double div_tol = 1e-8,
                                      const LinearOptions& opts = {}) {
  const double div = max_abs_interior(divergence(W));
  if (!(div <= div_tol)) {
    std::ostringstream os;
    os << "max |div W| = " << div << " exceeds " << div_tol;
    fail(ErrorKind::NonSolenoidalInput, os.str());
  }
  StreamFunction s;
  s.zeta = solve_poisson_dirichlet(rot(W), ScalarField(W.grid()), opts);
  const VectorField P = perp_gradient(s.zeta);
  s.mismatch = std::max(max_abs_diff_interior(P.u, W.u), max_abs_diff_interior(P.v, W.v));
  return s;
}

struct BernoulliPair {
  ScalarField G;
  ScalarField H;
};

/// grad F = -omega U^perp - W, so G = omega U^2 - W^1 and H = -omega U^1 - W^2.
inline BernoulliPair bernoulli_GH(const VectorField& U, const ScalarField& /*psi*/, const VectorField& W) {
  require_same_grid(U.grid(), W.grid(), "bernoulli_GH");
  const ScalarField omega = rot(U);
  BernoulliPair p;
  p.G = pointwise([](double w, double u2, double w1) { return w * u2 - w1; }, omega, U.v, W.u);
  p.H = pointwise([](double w, double u1, double w2) { return -w * u1 - w2; }, omega, U.u, W.v);
  return p;
}

/// max interior |d1 H - d2 G|.
inline double integrability_residual(const ScalarField& G, const ScalarField& H) {
  require_same_grid(G.grid(), H.grid(), "integrability_residual");
  return max_abs_interior(d1(H) - d2(G));
}

/// F(anchor) = C; trapezoid along the anchor row (integrand G), then along
/// each column (integrand H).
inline ScalarField reconstruct_F(const ScalarField& G, const ScalarField& H, double C = 0.0,
                                 NodeIndex anchor = {0, 0}) {
  require_same_grid(G.grid(), H.grid(), "reconstruct_F");
  const Grid2D& g = G.grid();
  if (anchor.i < 0 || anchor.j < 0 || anchor.i >= g.nx() || anchor.j >= g.ny()) {
    fail(ErrorKind::Domain, "anchor node outside the grid");
  }
  std::vector<double> row(g.nx());
  row[anchor.i] = C;
  for (int i = anchor.i + 1; i < g.nx(); ++i) {
    row[i] = row[i - 1] + 0.5 * (g.x(i) - g.x(i - 1)) * (G(i - 1, anchor.j) + G(i, anchor.j));
  }
  for (int i = anchor.i - 1; i >= 0; --i) {
    row[i] = row[i + 1] - 0.5 * (g.x(i + 1) - g.x(i)) * (G(i + 1, anchor.j) + G(i, anchor.j));
  }
  ScalarField F(g);
  for (int i = 0; i < g.nx(); ++i) {
    F(i, anchor.j) = row[i];
    for (int j = anchor.j + 1; j < g.ny(); ++j) {
      F(i, j) = F(i, j - 1) + 0.5 * (g.y(j) - g.y(j - 1)) * (H(i, j - 1) + H(i, j));
    }
    for (int j = anchor.j - 1; j >= 0; --j) {
      F(i, j) = F(i, j + 1) - 0.5 * (g.y(j + 1) - g.y(j)) * (H(i, j + 1) + H(i, j));
    }
  }
  return F;
}

/// Nodewise h(rho) + psi + |U|^2 / 2 - F.
inline ScalarField bernoulli_residual(const GasLaw& law, const ScalarField& rho, const ScalarField& psi,
                                      const VectorField& U, const ScalarField& F) {
  require_same_grid(rho.grid(), psi.grid(), "bernoulli_residual");
  require_same_grid(rho.grid(), U.grid(), "bernoulli_residual");
  require_same_grid(rho.grid(), F.grid(), "bernoulli_residual");
  ScalarField r(rho.grid());
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] = enthalpy(law, rho[k]) + psi[k] + 0.5 * (U.u[k] * U.u[k] + U.v[k] * U.v[k]) - F[k];
  }
  return r;
}

/// Least-squares constant c minimizing |residual - c| (the mean).
inline double best_fit_constant(const ScalarField& residual) { return mean(residual); }

}  // namespace selfsim
