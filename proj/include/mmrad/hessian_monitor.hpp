#pragma once

#include "mmrad/mesh_geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mmrad {

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

/// Nodal symmetric 2x2 tensors stored component-wise.
struct SymTensorField {
  Field xx, xy, yy;

  SymTensorField() = default;
  SymTensorField(Index M, Index N)
      : xx(Field::Zero(M, N)), xy(Field::Zero(M, N)), yy(Field::Zero(M, N)) {}

  Index rows() const { return xx.rows(); }
  Index cols() const { return xx.cols(); }

  Eigen::Matrix2d at(Index m, Index n) const {
    Eigen::Matrix2d a;
    a << xx(m, n), xy(m, n), xy(m, n), yy(m, n);
    return a;
  }
  void set(Index m, Index n, const Eigen::Matrix2d& a) {
    xx(m, n) = a(0, 0);
    xy(m, n) = 0.5 * (a(0, 1) + a(1, 0));
    yy(m, n) = a(1, 1);
  }
};

using HessianField = SymTensorField;

struct HessianDiagnostics {
  Index rank_deficient_nodes = 0;
};

/// Least-squares quadratic fit over the clamped 3x3 index neighborhood of
/// each node; H = [[2 c3, c4], [c4, 2 c5]]. Rank-deficient clusters give H = 0.
HessianField recover_hessian(const Field& E, const MovingMesh& mesh,
                             HessianDiagnostics* diagnostics = nullptr);

/// recover_hessian evaluated only at nodes (stride i, stride j); the result
/// lives on the grid coarsened by `stride` (nodal injection).
HessianField recover_hessian_sampled(const Field& E, const MovingMesh& mesh, Index stride,
                                     HessianDiagnostics* diagnostics = nullptr);

/// Q diag(|l1|, |l2|) Q^T.
template <typename Scalar>
Mat2<Scalar> absolute_hessian(const Mat2<Scalar>& H) {
  Eigen::SelfAdjointEigenSolver<Mat2<Scalar>> es;
  es.computeDirect(Mat2<Scalar>(Scalar(0.5) * (H + H.transpose())));
  const auto& Q = es.eigenvectors();
  return Q * es.eigenvalues().cwiseAbs().asDiagonal() * Q.transpose();
}

SymTensorField absolute_hessian(const HessianField& H);

struct AlphaResult {
  double alpha = 1.0;
  /// Right-hand side of the defining equation vanished.
  bool degenerate = false;
};

/// Root of sum_k w_k ((a + l1)(a + l2))^{1/4} = 2 sum_k w_k (l1 l2)^{1/4} by
/// bracketing and bisection, with w the trapezoidal weights times J.
AlphaResult compute_alpha(const SymTensorField& abs_hessian, const MovingMesh& mesh);

/// det(a I + |H|)^{-1/4} (a I + |H|).
template <typename Scalar>
Mat2<Scalar> monitor_tensor(const Mat2<Scalar>& abs_h, const Scalar& alpha) {
  using std::pow;
  const Mat2<Scalar> a = abs_h + alpha * Mat2<Scalar>::Identity();
  return pow(a.determinant(), Scalar(-0.25)) * a;
}

SymTensorField monitor_function(const SymTensorField& abs_hessian, double alpha);

/// (4, 2, 1) / 16 filter in index space with reflected neighbors at the edges.
SymTensorField smooth_monitor(const SymTensorField& monitor, int sweeps);

/// Monitor tensors with their physical gradients. Evaluated away from the
/// reference positions by a first-order Taylor expansion, so a node that
/// moves during a mesh step sees the monitor of its new location.
struct MonitorField {
  SymTensorField M;
  SymTensorField dMdx;
  SymTensorField dMdy;
  Field x_ref;
  Field y_ref;
  double alpha = 1.0;

  Eigen::Matrix2d at(Index m, Index n) const { return M.at(m, n); }
  Eigen::Matrix2d at(Index m, Index n, double x, double y) const {
    const double dx = x - x_ref(m, n), dy = y - y_ref(m, n);
    return M.at(m, n) + dx * dMdx.at(m, n) + dy * dMdy.at(m, n);
  }
};

/// Attach tensors to a mesh; gradients are zero unless `eulerian` is set.
MonitorField make_monitor_field(SymTensorField M, const MovingMesh& mesh, double alpha,
                                bool eulerian = true);

MonitorField constant_monitor(const MovingMesh& mesh, const Eigen::Matrix2d& value);

struct MonitorOptions {
  int sweeps = 4;
  /// Lower bound on alpha as a fraction of the root obtained with each |H|
  /// replaced by its isotropic part; keeps alpha away from zero when |H| is
  /// rank one almost everywhere.
  double alpha_floor_ratio = 0.1;
  bool eulerian = true;
};

struct MonitorDiagnostics {
  HessianDiagnostics hessian;
  AlphaResult alpha_det;
  double alpha_iso = 0.0;
  double alpha = 1.0;
};

/// |H| -> alpha -> monitor -> smoothing on the given mesh.
MonitorField monitor_from_hessian(const HessianField& H, const MovingMesh& mesh,
                                  const MonitorOptions& options,
                                  MonitorDiagnostics* diagnostics = nullptr);

MonitorField build_monitor(const Field& E, const MovingMesh& mesh, const MonitorOptions& options,
                           MonitorDiagnostics* diagnostics = nullptr);

}  // namespace mmrad
