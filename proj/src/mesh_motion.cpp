#include "mmrad/mesh_motion.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <vector>

namespace mmrad {

void validate(const MeshingParams& p) {
  if (!(p.tau > 0.0)) throw std::invalid_argument("meshing: tau must be positive");
  if (!(p.theta > 0.0 && p.theta <= 0.5)) throw std::invalid_argument("meshing: theta must lie in (0, 1/2]");
  if (p.sweeps < 0) throw std::invalid_argument("meshing: sweeps must be non-negative");
  if (p.substeps < 1) throw std::invalid_argument("meshing: substeps must be at least 1");
  if (!(p.alpha_floor_ratio >= 0.0)) throw std::invalid_argument("meshing: alpha floor ratio must be non-negative");
  if (p.pre_adapt_cycles < 0) throw std::invalid_argument("meshing: pre-adaptation cycles must be non-negative");
  if (p.max_halvings < 0) throw std::invalid_argument("meshing: max halvings must be non-negative");
}

namespace {

// Backward Euler step of x_t = (1/tau) (m x_xi)_xi / m on one edge with fixed
// end points; m is the nodal edge monitor.
std::vector<double> equidistribute_edge(const std::vector<double>& x, const std::vector<double>& m,
                                        double ratio) {
  const std::size_t K = x.size() - 1;
  const double h = 1.0 / static_cast<double>(K);
  std::vector<double> lower(K + 1, 0.0), diag(K + 1, 1.0), upper(K + 1, 0.0), rhs = x;
  for (std::size_t i = 1; i < K; ++i) {
    const double ml = 0.5 * (m[i - 1] + m[i]);
    const double mr = 0.5 * (m[i] + m[i + 1]);
    const double r = ratio / (h * h * m[i]);
    lower[i] = -r * ml;
    upper[i] = -r * mr;
    diag[i] = 1.0 + r * (ml + mr);
  }
  // Thomas algorithm; rows 0 and K are identity rows.
  for (std::size_t i = 1; i <= K; ++i) {
    const double f = lower[i] / diag[i - 1];
    diag[i] -= f * upper[i - 1];
    rhs[i] -= f * rhs[i - 1];
  }
  std::vector<double> out(K + 1);
  out[K] = rhs[K] / diag[K];
  for (std::size_t i = K; i-- > 0;) out[i] = (rhs[i] - upper[i] * out[i + 1]) / diag[i];
  out.front() = x.front();
  out.back() = x.back();
  return out;
}

double edge_monitor(const MonitorField& monitor, const MovingMesh& mesh, Index m, Index n, bool along_x) {
  Eigen::Matrix2d M = monitor.at(m, n, mesh.x(m, n), mesh.y(m, n));
  if (!(M(0, 0) > 0.0 && M.determinant() > 0.0)) M = monitor.at(m, n);
  return std::sqrt(along_x ? M(0, 0) : M(1, 1));
}

struct Displacement {
  Field dx;
  Field dy;
};

// Linearly implicit MMPDE displacement with prescribed boundary displacement.
Displacement implicit_displacement(const MovingMesh& mesh, const MonitorField& monitor,
                                   const MeshingParams& params, double dt, const Field& bdx,
                                   const Field& bdy) {
  const auto& g = mesh.grid;
  const Index M = g.M, N = g.N;
  const double k = dt / params.tau;
  const CoordinateGradient cg = functional_coordinate_gradient(mesh, monitor, params.theta);
  const Eigen::SparseMatrix<double> H = functional_hessian(mesh, monitor, params.theta);
  const MetricTerms mt = compute_metrics(mesh, false);
  const Field w = trapezoid_weights(g);

  auto unknown = [&](Index node) -> Index {
    const Index m = node % M, n = node / M;
    if (m == 0 || n == 0 || m == M - 1 || n == N - 1) return -1;
    return (m - 1) + (M - 2) * (n - 1);
  };
  auto boundary_value = [&](Index dof) {
    const Index node = dof / 2;
    return dof % 2 == 0 ? bdx(node % M, node / M) : bdy(node % M, node / M);
  };

  const Index nu = 2 * (M - 2) * (N - 2);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(H.nonZeros() + 4 * nu));
  Eigen::VectorXd rhs(nu);

  for (Index n = 1; n + 1 < N; ++n) {
    for (Index m = 1; m + 1 < M; ++m) {
      const Index p = 2 * unknown(g.node(m, n));
      const Eigen::Matrix2d F = mt.jacobian_matrix(m, n);
      const double s = std::sqrt(monitor.at(m, n).determinant());
      Eigen::Matrix2d block = Eigen::Matrix2d::Identity() * (w(m, n) / s);
      if (mt.J(m, n) > 0.0) block = (mt.J(m, n) * w(m, n) / s) * (F * F.transpose()).inverse();
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) trips.emplace_back(static_cast<int>(p + a), static_cast<int>(p + b), block(a, b));
      }
      rhs(p) = -k * cg.gx(m, n);
      rhs(p + 1) = -k * cg.gy(m, n);
    }
  }
  for (Index col = 0; col < H.outerSize(); ++col) {
    const Index cu = unknown(col / 2);
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, col); it; ++it) {
      const Index ru = unknown(it.row() / 2);
      if (ru < 0) continue;
      const Index r = 2 * ru + it.row() % 2;
      if (cu >= 0) {
        trips.emplace_back(static_cast<int>(r), static_cast<int>(2 * cu + col % 2), k * it.value());
      } else {
        const double d = boundary_value(col);
        if (d != 0.0) rhs(r) -= k * it.value() * d;
      }
    }
  }
  Eigen::SparseMatrix<double> A(nu, nu);
  A.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("mesh step: factorization failed");
  const Eigen::VectorXd delta = ldlt.solve(rhs);

  Displacement out{bdx, bdy};
  for (Index n = 1; n + 1 < N; ++n) {
    for (Index m = 1; m + 1 < M; ++m) {
      const Index p = 2 * unknown(g.node(m, n));
      out.dx(m, n) = delta(p);
      out.dy(m, n) = delta(p + 1);
    }
  }
  return out;
}

MovingMesh displaced(const MovingMesh& mesh, const Displacement& d, double lambda) {
  MovingMesh out = mesh;
  out.x = mesh.x + lambda * d.dx;
  out.y = mesh.y + lambda * d.dy;
  return out;
}

MovingMesh line_search(const MovingMesh& mesh, const MonitorField& monitor, const MeshingParams& params,
                       const Displacement& d, bool require_descent, MeshStepReport* report) {
  const double before = functional_value(mesh, monitor, params.theta);
  double lambda = 1.0;
  for (int h = 0; h <= params.max_halvings; ++h, lambda *= 0.5) {
    const MovingMesh cand = displaced(mesh, d, lambda);
    if (!(min_corner_jacobian(cand) > 0.0)) continue;
    const double after = functional_value(cand, monitor, params.theta);
    if (!std::isfinite(after)) continue;
    if (require_descent && !(after <= before + 1e-12)) continue;
    if (report) *report = {h, false, before, after};
    return cand;
  }
  // The linearization is untrustworthy this far out; stay put and let the
  // next monitor update try again.
  if (report) *report = {params.max_halvings, true, before, before};
  return mesh;
}

}  // namespace

MovingMesh move_boundary_points(const MovingMesh& mesh, const MonitorField& monitor,
                                const MeshingParams& params, double dt) {
  validate(params);
  if (!(dt >= 0.0)) throw std::invalid_argument("move_boundary_points: dt must be non-negative");
  MovingMesh out = mesh;
  if (dt == 0.0) return out;
  const Index M = mesh.grid.M, N = mesh.grid.N;
  const double ratio = dt / params.tau;

  for (Index n : {Index(0), N - 1}) {
    std::vector<double> x(static_cast<std::size_t>(M)), m(static_cast<std::size_t>(M));
    for (Index i = 0; i < M; ++i) {
      x[static_cast<std::size_t>(i)] = mesh.x(i, n);
      m[static_cast<std::size_t>(i)] = edge_monitor(monitor, mesh, i, n, true);
    }
    const auto xn = equidistribute_edge(x, m, ratio);
    for (Index i = 1; i + 1 < M; ++i) out.x(i, n) = xn[static_cast<std::size_t>(i)];
  }
  for (Index i : {Index(0), M - 1}) {
    std::vector<double> y(static_cast<std::size_t>(N)), m(static_cast<std::size_t>(N));
    for (Index n = 0; n < N; ++n) {
      y[static_cast<std::size_t>(n)] = mesh.y(i, n);
      m[static_cast<std::size_t>(n)] = edge_monitor(monitor, mesh, i, n, false);
    }
    const auto yn = equidistribute_edge(y, m, ratio);
    for (Index n = 1; n + 1 < N; ++n) out.y(i, n) = yn[static_cast<std::size_t>(n)];
  }
  return out;
}

MovingMesh mmpde_step(const MovingMesh& mesh, const MonitorField& monitor, const MeshingParams& params,
                      double dt, MeshStepReport* report) {
  validate(params);
  if (!(dt >= 0.0)) throw std::invalid_argument("mmpde_step: dt must be non-negative");
  if (dt == 0.0) return mesh;
  const Field zero = Field::Zero(mesh.grid.M, mesh.grid.N);
  const Displacement d = implicit_displacement(mesh, monitor, params, dt, zero, zero);
  return line_search(mesh, monitor, params, d, true, report);
}

MovingMesh advance_mesh(const MovingMesh& mesh, const MonitorField& monitor, const MeshingParams& params,
                        double dt, MeshStepReport* report) {
  validate(params);
  if (!(dt >= 0.0)) throw std::invalid_argument("advance_mesh: dt must be non-negative");
  MovingMesh cur = mesh;
  if (dt == 0.0) return cur;
  const double h = dt / params.substeps;
  for (int s = 0; s < params.substeps; ++s) {
    const MovingMesh bdy = move_boundary_points(cur, monitor, params, h);
    const Displacement d = implicit_displacement(cur, monitor, params, h, bdy.x - cur.x, bdy.y - cur.y);
    cur = line_search(cur, monitor, params, d, false, report);
  }
  return cur;
}

TwoLevelMeshes two_level_cycle(const MovingMesh& coarse, const MovingMesh& fine, const Field& E_fine,
                               int factor, const MeshingParams& params, double dt,
                               MonitorDiagnostics* diagnostics) {
  if (factor < 1) throw std::invalid_argument("two_level_cycle: factor must be at least 1");
  const MonitorOptions opts = params.monitor_options();
  if (factor == 1) {
    const MonitorField mon = build_monitor(E_fine, coarse, opts, diagnostics);
    MovingMesh next = advance_mesh(coarse, mon, params, dt);
    return {next, next};
  }
  if (fine.grid.M != factor * (coarse.grid.M - 1) + 1 || fine.grid.N != factor * (coarse.grid.N - 1) + 1) {
    throw std::invalid_argument("two_level_cycle: fine grid is not the refinement of the coarse grid");
  }
  HessianDiagnostics hd;
  // Only the coincident nodes survive injection, so only they are fitted.
  const HessianField Hc = recover_hessian_sampled(E_fine, fine, factor, &hd);
  if (diagnostics) diagnostics->hessian = hd;
  const MonitorField mon = monitor_from_hessian(Hc, coarse, opts, diagnostics);
  MovingMesh next = advance_mesh(coarse, mon, params, dt);
  MovingMesh next_fine = refine_uniform(next, factor);
  next_fine.t = next.t;
  return {std::move(next), std::move(next_fine)};
}

}  // namespace mmrad
