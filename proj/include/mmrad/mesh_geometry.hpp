#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mmrad {

using Index = Eigen::Index;

/// Nodal field stored as an (M, N) array; column-major, so node (m, n) sits at
/// linear index m + M * n (m fastest).
template <typename Scalar>
using FieldT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Field = FieldT<double>;

class MeshFoldError : public std::runtime_error {
 public:
  MeshFoldError(const std::string& what, Index m, Index n, double jacobian)
      : std::runtime_error(what), m_(m), n_(n), jacobian_(jacobian) {}
  Index m() const { return m_; }
  Index n() const { return n_; }
  double jacobian() const { return jacobian_; }

 private:
  Index m_;
  Index n_;
  double jacobian_;
};

/// Uniform computational grid on [0,1]^2 with M x N nodes.
struct ReferenceGrid {
  Index M = 0;
  Index N = 0;

  double dxi() const { return 1.0 / static_cast<double>(M - 1); }
  double deta() const { return 1.0 / static_cast<double>(N - 1); }
  double xi(Index m) const { return static_cast<double>(m) * dxi(); }
  double eta(Index n) const { return static_cast<double>(n) * deta(); }
  Index node(Index m, Index n) const { return m + M * n; }
  Index size() const { return M * N; }
  bool is_boundary(Index m, Index n) const {
    return m == 0 || n == 0 || m == M - 1 || n == N - 1;
  }
  bool operator==(const ReferenceGrid&) const = default;
};

/// Throws std::invalid_argument unless M, N >= 3.
ReferenceGrid make_grid(Index M, Index N);

struct MovingMesh {
  ReferenceGrid grid;
  Field x;
  Field y;
  double t = 0.0;
};

struct MeshVelocity {
  Field vx;
  Field vy;
};

MeshVelocity zero_velocity(const ReferenceGrid& grid);

/// Metric terms of the map (xi, eta) -> (x, y) at nodes.
///   J = x_xi y_eta - x_eta y_xi
///   A = (1/J) [[x_eta^2 + y_eta^2, -(x_xi x_eta + y_xi y_eta)], [., x_xi^2 + y_xi^2]]
///   b = (1/J) [y_eta x_t - x_eta y_t, -y_xi x_t + x_xi y_t]
struct MetricTerms {
  Field x_xi, x_eta, y_xi, y_eta;
  Field J;
  Field a11, a12, a22;
  Field b1, b2;

  Eigen::Matrix2d A(Index m, Index n) const {
    Eigen::Matrix2d a;
    a << a11(m, n), a12(m, n), a12(m, n), a22(m, n);
    return a;
  }
  Eigen::Matrix2d jacobian_matrix(Index m, Index n) const {
    Eigen::Matrix2d f;
    f << x_xi(m, n), x_eta(m, n), y_xi(m, n), y_eta(m, n);
    return f;
  }
};

/// First derivative along xi: central in the interior, second-order
/// one-sided three-point differences on xi = 0 and xi = 1.
template <typename Scalar>
FieldT<Scalar> d_dxi(const FieldT<Scalar>& f, double h) {
  const Index M = f.rows();
  FieldT<Scalar> d(f.rows(), f.cols());
  const Scalar inv2h = Scalar(0.5 / h);
  d.middleRows(1, M - 2) = (f.bottomRows(M - 2) - f.topRows(M - 2)) * inv2h;
  d.row(0) = (Scalar(-3) * f.row(0) + Scalar(4) * f.row(1) - f.row(2)) * inv2h;
  d.row(M - 1) = (Scalar(3) * f.row(M - 1) - Scalar(4) * f.row(M - 2) + f.row(M - 3)) * inv2h;
  return d;
}

template <typename Scalar>
FieldT<Scalar> d_deta(const FieldT<Scalar>& f, double h) {
  const Index N = f.cols();
  FieldT<Scalar> d(f.rows(), f.cols());
  const Scalar inv2h = Scalar(0.5 / h);
  d.middleCols(1, N - 2) = (f.rightCols(N - 2) - f.leftCols(N - 2)) * inv2h;
  d.col(0) = (Scalar(-3) * f.col(0) + Scalar(4) * f.col(1) - f.col(2)) * inv2h;
  d.col(N - 1) = (Scalar(3) * f.col(N - 1) - Scalar(4) * f.col(N - 2) + f.col(N - 3)) * inv2h;
  return d;
}

/// Identity map x = xi, y = eta.
MovingMesh uniform_mesh(const ReferenceGrid& grid, double t = 0.0);

/// Throws MeshFoldError at the first node with J <= 0 when `check` is set.
/// Boundary nodes whose three-point one-sided J is not positive use two-point
/// differences instead.
MetricTerms compute_metrics(const MovingMesh& mesh, const MeshVelocity& velocity,
                            bool check = true);
MetricTerms compute_metrics(const MovingMesh& mesh, bool check = true);

double min_jacobian(const MetricTerms& metrics);

/// Smallest Jacobian over the four corner triangles of every cell. Positive
/// exactly when every cell is a convex, positively oriented quadrilateral.
double min_corner_jacobian(const MovingMesh& mesh);

/// Mesh pair on [t_n, t_n + dt]; nodes move linearly in time between them.
struct MeshMotion {
  MovingMesh from;
  MovingMesh to;
  double dt = 0.0;

  double t_begin() const { return from.t; }
  double t_end() const { return from.t + dt; }
};

MeshMotion make_motion(MovingMesh from, MovingMesh to);
MovingMesh mesh_at_time(const MeshMotion& motion, double t);
MeshVelocity motion_velocity(const MeshMotion& motion);

/// Bilinear uniform refinement; fine grid has r (M-1) + 1 by r (N-1) + 1 nodes.
MovingMesh refine_uniform(const MovingMesh& coarse, int factor);

/// Fine-to-coarse injection at coincident nodes.
Field restrict_injection(const Field& fine, const ReferenceGrid& coarse, int factor);

/// Trapezoidal quadrature weights in computational space (h_xi h_eta times
/// 1, 1/2 or 1/4); multiply by J for physical-space quadrature.
Field trapezoid_weights(const ReferenceGrid& grid);

/// Evaluate a nodal field at a physical point by locating the containing cell
/// and inverting its bilinear map. Returns NaN outside the mesh.
double sample_field(const MovingMesh& mesh, const Field& f, double x, double y);

}  // namespace mmrad
