#pragma once

#include "mmrad/hessian_monitor.hpp"
#include "mmrad/mesh_geometry.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cmath>

namespace mmrad {

// Discrete meshing functional
//   I_h = sum_cells sum_corners (h_xi h_eta / 4) e(F_c, M_c),
//   e(F, M) = theta s beta^2 J + 4 (1 - 2 theta) / (J s),
// with F the corner Jacobian matrix built from one-sided edge differences,
// J = det F, s = sqrt(det M) and beta = tr(F^{-1} M^{-1} F^{-T}). This is the
// corner-triangle quadrature of the continuous functional written in
// computational coordinates (dx dy = J dxi deta).

template <typename Scalar>
Scalar corner_energy(const Mat2<Scalar>& F, const Mat2<Scalar>& M, double theta) {
  using std::sqrt;
  const Scalar J = F.determinant();
  const Scalar s = sqrt(M.determinant());
  const Mat2<Scalar> P = F.inverse();
  const Scalar beta = (P * M.inverse() * P.transpose()).trace();
  return Scalar(theta) * s * beta * beta * J + Scalar(4.0 * (1.0 - 2.0 * theta)) / (J * s);
}

template <typename Scalar>
struct CornerGradient {
  Mat2<Scalar> dF;
  Mat2<Scalar> dM;
};

/// Exact partial derivatives of corner_energy with respect to F and M.
template <typename Scalar>
CornerGradient<Scalar> corner_energy_gradient(const Mat2<Scalar>& F, const Mat2<Scalar>& M,
                                              double theta) {
  using std::sqrt;
  const Scalar c = Scalar(4.0 * (1.0 - 2.0 * theta));
  const Scalar J = F.determinant();
  const Scalar s = sqrt(M.determinant());
  const Mat2<Scalar> P = F.inverse();
  const Mat2<Scalar> Pt = P.transpose();
  const Mat2<Scalar> N = M.inverse();
  const Mat2<Scalar> PNPt = P * N * Pt;
  const Scalar beta = PNPt.trace();
  const Mat2<Scalar> g_beta = Scalar(-2) * Pt * PNPt;

  CornerGradient<Scalar> g;
  g.dF = Scalar(theta) * s * J * (Scalar(2) * beta * g_beta + beta * beta * Pt) - (c / (s * J)) * Pt;
  const Scalar de_ds = Scalar(theta) * beta * beta * J - c / (J * s * s);
  const Mat2<Scalar> g_N = Scalar(2.0 * theta) * s * beta * J * (Pt * P);
  g.dM = de_ds * (s / Scalar(2)) * N - N * g_N * N;
  return g;
}

/// One corner of a cell: the node it sits at, its neighbor along xi and along
/// eta within the cell, and the orientation signs of those edges.
struct CellCorner {
  Index node_m, node_n;
  Index xi_m, xi_n;
  Index eta_m, eta_n;
  double s_xi, s_eta;
};

inline std::array<CellCorner, 4> cell_corners(Index i, Index j) {
  return {{{i, j, i + 1, j, i, j + 1, 1.0, 1.0},
           {i + 1, j, i, j, i + 1, j + 1, -1.0, 1.0},
           {i, j + 1, i + 1, j + 1, i, j, 1.0, -1.0},
           {i + 1, j + 1, i, j + 1, i + 1, j, -1.0, -1.0}}};
}

Eigen::Matrix2d corner_jacobian_matrix(const MovingMesh& mesh, const CellCorner& c);

/// I_h for the mesh; +infinity when a corner Jacobian is non-positive or the
/// monitor evaluated at a moved node is not positive definite.
double functional_value(const MovingMesh& mesh, const MonitorField& monitor, double theta = 0.1);

/// Gradient of I_h with respect to nodal coordinates.
struct CoordinateGradient {
  Field gx;
  Field gy;
  double value = 0.0;
};

CoordinateGradient functional_coordinate_gradient(const MovingMesh& mesh,
                                                  const MonitorField& monitor,
                                                  double theta = 0.1);

/// Variational derivatives (dI/dxi, dI/deta) at nodes, recovered from the
/// coordinate gradient g through dI/dxi = -(1/J) F^T g / (w h_xi h_eta), with
/// w the trapezoidal node factor.
struct XiGradient {
  Field d_xi;
  Field d_eta;
};

XiGradient functional_gradient(const MovingMesh& mesh, const MonitorField& monitor,
                               double theta = 0.1);

/// Positive semidefinite approximation of the Hessian of I_h with respect to
/// nodal coordinates (ordering 2 * node + {0: x, 1: y}), formed from the
/// per-corner Hessian in F with negative eigenvalues clipped. The monitor is
/// held fixed.
Eigen::SparseMatrix<double> functional_hessian(const MovingMesh& mesh, const MonitorField& monitor,
                                               double theta = 0.1);

}  // namespace mmrad
