#include "mmrad/meshing_functional.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <limits>
#include <vector>

namespace mmrad {

namespace {

bool positive_definite(const Eigen::Matrix2d& M) { return M(0, 0) > 0.0 && M.determinant() > 0.0; }

Eigen::Matrix2d corner_monitor(const MovingMesh& mesh, const MonitorField& monitor, const CellCorner& c) {
  return monitor.at(c.node_m, c.node_n, mesh.x(c.node_m, c.node_n), mesh.y(c.node_m, c.node_n));
}

double contract(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
  return (a.array() * b.array()).sum();
}

using AD = Eigen::AutoDiffScalar<Eigen::Vector4d>;

/// d^2 e / dF^2 (entries ordered F00, F01, F10, F11) with M held fixed.
Eigen::Matrix4d corner_hessian(const Eigen::Matrix2d& F, const Eigen::Matrix2d& M, double theta) {
  Mat2<AD> Fa;
  Fa(0, 0) = AD(F(0, 0), 4, 0);
  Fa(0, 1) = AD(F(0, 1), 4, 1);
  Fa(1, 0) = AD(F(1, 0), 4, 2);
  Fa(1, 1) = AD(F(1, 1), 4, 3);
  Mat2<AD> Ma;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) Ma(i, j) = AD(M(i, j), Eigen::Vector4d::Zero());
  }
  const CornerGradient<AD> g = corner_energy_gradient<AD>(Fa, Ma, theta);
  Eigen::Matrix4d H;
  H.row(0) = g.dF(0, 0).derivatives().transpose();
  H.row(1) = g.dF(0, 1).derivatives().transpose();
  H.row(2) = g.dF(1, 0).derivatives().transpose();
  H.row(3) = g.dF(1, 1).derivatives().transpose();
  return 0.5 * (H + H.transpose());
}

}  // namespace

Eigen::Matrix2d corner_jacobian_matrix(const MovingMesh& mesh, const CellCorner& c) {
  const double hx = mesh.grid.dxi(), he = mesh.grid.deta();
  Eigen::Matrix2d F;
  F(0, 0) = c.s_xi * (mesh.x(c.xi_m, c.xi_n) - mesh.x(c.node_m, c.node_n)) / hx;
  F(1, 0) = c.s_xi * (mesh.y(c.xi_m, c.xi_n) - mesh.y(c.node_m, c.node_n)) / hx;
  F(0, 1) = c.s_eta * (mesh.x(c.eta_m, c.eta_n) - mesh.x(c.node_m, c.node_n)) / he;
  F(1, 1) = c.s_eta * (mesh.y(c.eta_m, c.eta_n) - mesh.y(c.node_m, c.node_n)) / he;
  return F;
}

double functional_value(const MovingMesh& mesh, const MonitorField& monitor, double theta) {
  const auto& g = mesh.grid;
  const double w = 0.25 * g.dxi() * g.deta();
  double total = 0.0;
  for (Index j = 0; j + 1 < g.N; ++j) {
    for (Index i = 0; i + 1 < g.M; ++i) {
      for (const CellCorner& c : cell_corners(i, j)) {
        const Eigen::Matrix2d F = corner_jacobian_matrix(mesh, c);
        const Eigen::Matrix2d M = corner_monitor(mesh, monitor, c);
        if (!(F.determinant() > 0.0) || !positive_definite(M)) {
          return std::numeric_limits<double>::infinity();
        }
        total += w * corner_energy<double>(F, M, theta);
      }
    }
  }
  return total;
}

CoordinateGradient functional_coordinate_gradient(const MovingMesh& mesh, const MonitorField& monitor,
                                                  double theta) {
  const auto& g = mesh.grid;
  const double hx = g.dxi(), he = g.deta();
  const double w = 0.25 * hx * he;
  CoordinateGradient out{Field::Zero(g.M, g.N), Field::Zero(g.M, g.N), 0.0};
  for (Index j = 0; j + 1 < g.N; ++j) {
    for (Index i = 0; i + 1 < g.M; ++i) {
      for (const CellCorner& c : cell_corners(i, j)) {
        const Eigen::Matrix2d F = corner_jacobian_matrix(mesh, c);
        const Eigen::Matrix2d M = corner_monitor(mesh, monitor, c);
        if (!(F.determinant() > 0.0)) {
          throw MeshFoldError("functional gradient: folded cell corner", c.node_m, c.node_n,
                              F.determinant());
        }
        if (!positive_definite(M)) {
          throw std::domain_error("functional gradient: monitor not positive definite");
        }
        out.value += w * corner_energy<double>(F, M, theta);
        const CornerGradient<double> d = corner_energy_gradient<double>(F, M, theta);
        const double ax = c.s_xi / hx, ae = c.s_eta / he;
        out.gx(c.node_m, c.node_n) +=
            w * (-d.dF(0, 0) * ax - d.dF(0, 1) * ae +
                 contract(d.dM, monitor.dMdx.at(c.node_m, c.node_n)));
        out.gy(c.node_m, c.node_n) +=
            w * (-d.dF(1, 0) * ax - d.dF(1, 1) * ae +
                 contract(d.dM, monitor.dMdy.at(c.node_m, c.node_n)));
        out.gx(c.xi_m, c.xi_n) += w * d.dF(0, 0) * ax;
        out.gy(c.xi_m, c.xi_n) += w * d.dF(1, 0) * ax;
        out.gx(c.eta_m, c.eta_n) += w * d.dF(0, 1) * ae;
        out.gy(c.eta_m, c.eta_n) += w * d.dF(1, 1) * ae;
      }
    }
  }
  return out;
}

XiGradient functional_gradient(const MovingMesh& mesh, const MonitorField& monitor, double theta) {
  const CoordinateGradient cg = functional_coordinate_gradient(mesh, monitor, theta);
  const MetricTerms mt = compute_metrics(mesh);
  const Field w = trapezoid_weights(mesh.grid);
  XiGradient out{Field(mesh.grid.M, mesh.grid.N), Field(mesh.grid.M, mesh.grid.N)};
  // (F^T g) / (J w h_xi h_eta), with w already carrying h_xi h_eta.
  out.d_xi = -(mt.x_xi * cg.gx + mt.y_xi * cg.gy) / (mt.J * w);
  out.d_eta = -(mt.x_eta * cg.gx + mt.y_eta * cg.gy) / (mt.J * w);
  return out;
}

Eigen::SparseMatrix<double> functional_hessian(const MovingMesh& mesh, const MonitorField& monitor,
                                               double theta) {
  const auto& g = mesh.grid;
  const double hx = g.dxi(), he = g.deta();
  const double w = 0.25 * hx * he;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>((g.M - 1) * (g.N - 1) * 4 * 36));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es;
  for (Index j = 0; j + 1 < g.N; ++j) {
    for (Index i = 0; i + 1 < g.M; ++i) {
      for (const CellCorner& c : cell_corners(i, j)) {
        const Eigen::Matrix2d F = corner_jacobian_matrix(mesh, c);
        const Eigen::Matrix2d M = corner_monitor(mesh, monitor, c);
        if (!(F.determinant() > 0.0) || !positive_definite(M)) {
          throw MeshFoldError("functional hessian: invalid corner", c.node_m, c.node_n, F.determinant());
        }
        es.compute(corner_hessian(F, M, theta));
        const Eigen::Matrix4d Hf = es.eigenvectors() *
                                   es.eigenvalues().cwiseMax(0.0).asDiagonal() *
                                   es.eigenvectors().transpose();
        Eigen::Matrix<double, 4, 6> B = Eigen::Matrix<double, 4, 6>::Zero();
        const double ax = c.s_xi / hx, ae = c.s_eta / he;
        B(0, 0) = -ax;
        B(0, 2) = ax;
        B(1, 0) = -ae;
        B(1, 4) = ae;
        B(2, 1) = -ax;
        B(2, 3) = ax;
        B(3, 1) = -ae;
        B(3, 5) = ae;
        const Eigen::Matrix<double, 6, 6> Hq = w * B.transpose() * Hf * B;
        const std::array<Index, 3> nodes = {g.node(c.node_m, c.node_n), g.node(c.xi_m, c.xi_n),
                                            g.node(c.eta_m, c.eta_n)};
        for (int a = 0; a < 6; ++a) {
          for (int b = 0; b < 6; ++b) {
            trips.emplace_back(static_cast<int>(2 * nodes[a / 2] + a % 2),
                               static_cast<int>(2 * nodes[b / 2] + b % 2), Hq(a, b));
          }
        }
      }
    }
  }
  Eigen::SparseMatrix<double> H(2 * g.size(), 2 * g.size());
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

}  // namespace mmrad
