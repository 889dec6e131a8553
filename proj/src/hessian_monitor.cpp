#include "mmrad/hessian_monitor.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <vector>

namespace mmrad {

namespace {

// LSQ quadratic fit over the clamped 3x3 window of node (m, n); false when
// the cluster is rank deficient.
bool fit_hessian(const Field& E, const MovingMesh& mesh, Index m, Index n, Eigen::Matrix2d& H) {
  const Index M = mesh.grid.M, N = mesh.grid.N;
  const Index n0 = std::clamp<Index>(n - 1, 0, N - 3);
  const Index m0 = std::clamp<Index>(m - 1, 0, M - 3);
  const double xc = mesh.x(m, n), yc = mesh.y(m, n);
  double L = 0.0;
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < 3; ++i) {
      L = std::max(L, std::hypot(mesh.x(m0 + i, n0 + j) - xc, mesh.y(m0 + i, n0 + j) - yc));
    }
  }
  if (!(L > 0.0)) return false;
  Eigen::Matrix<double, 9, 6> A;
  Eigen::Matrix<double, 9, 1> b;
  int r = 0;
  for (Index j = 0; j < 3; ++j) {
    for (Index i = 0; i < 3; ++i, ++r) {
      const double dx = (mesh.x(m0 + i, n0 + j) - xc) / L;
      const double dy = (mesh.y(m0 + i, n0 + j) - yc) / L;
      A.row(r) << 1.0, dx, dy, dx * dx, dx * dy, dy * dy;
      b(r) = E(m0 + i, n0 + j);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 9, 6>> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) return false;
  const Eigen::Matrix<double, 6, 1> c = qr.solve(b);
  const double s = 1.0 / (L * L);
  H << 2.0 * c(3) * s, c(4) * s, c(4) * s, 2.0 * c(5) * s;
  return true;
}

}  // namespace

HessianField recover_hessian(const Field& E, const MovingMesh& mesh, HessianDiagnostics* diag) {
  return recover_hessian_sampled(E, mesh, 1, diag);
}

HessianField recover_hessian_sampled(const Field& E, const MovingMesh& mesh, Index stride,
                                     HessianDiagnostics* diag) {
  const Index M = mesh.grid.M, N = mesh.grid.N;
  if (E.rows() != M || E.cols() != N) throw std::invalid_argument("recover_hessian: shape mismatch");
  if (stride < 1 || (M - 1) % stride != 0 || (N - 1) % stride != 0) {
    throw std::invalid_argument("recover_hessian: stride must divide the grid");
  }
  HessianField H((M - 1) / stride + 1, (N - 1) / stride + 1);
  Eigen::Matrix2d h;
  for (Index j = 0; j < H.cols(); ++j) {
    for (Index i = 0; i < H.rows(); ++i) {
      if (fit_hessian(E, mesh, i * stride, j * stride, h)) {
        H.set(i, j, h);
      } else if (diag) {
        ++diag->rank_deficient_nodes;
      }
    }
  }
  return H;
}

SymTensorField absolute_hessian(const HessianField& H) {
  SymTensorField out(H.rows(), H.cols());
  for (Index n = 0; n < H.cols(); ++n) {
    for (Index m = 0; m < H.rows(); ++m) out.set(m, n, absolute_hessian<double>(H.at(m, n)));
  }
  return out;
}

namespace {

struct EigenPair {
  double l1, l2;
};

double alpha_equation_lhs(const std::vector<EigenPair>& eig, const Field& w, double a) {
  double s = 0.0;
  for (Index k = 0; k < w.size(); ++k) {
    s += w(k) * std::sqrt(std::sqrt((a + eig[k].l1) * (a + eig[k].l2)));
  }
  return s;
}

AlphaResult solve_alpha(const std::vector<EigenPair>& eig, const Field& w) {
  double scale = 0.0;
  for (const auto& e : eig) scale = std::max({scale, e.l1, e.l2});
  if (!(scale > 0.0)) return {1.0, true};
  const double target = 2.0 * alpha_equation_lhs(eig, w, 0.0);
  if (!(target > 0.0)) return {0.0, false};
  double lo = 0.0, hi = scale;
  while (alpha_equation_lhs(eig, w, hi) < target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (alpha_equation_lhs(eig, w, mid) < target ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

Field physical_weights(const MovingMesh& mesh) {
  const MetricTerms mt = compute_metrics(mesh);
  return trapezoid_weights(mesh.grid) * mt.J;
}

}  // namespace

AlphaResult compute_alpha(const SymTensorField& abs_h, const MovingMesh& mesh) {
  const Field w = physical_weights(mesh);
  std::vector<EigenPair> eig(static_cast<std::size_t>(w.size()));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es;
  for (Index n = 0; n < abs_h.cols(); ++n) {
    for (Index m = 0; m < abs_h.rows(); ++m) {
      es.computeDirect(abs_h.at(m, n), Eigen::EigenvaluesOnly);
      eig[static_cast<std::size_t>(mesh.grid.node(m, n))] = {std::max(0.0, es.eigenvalues()(0)),
                                                              std::max(0.0, es.eigenvalues()(1))};
    }
  }
  return solve_alpha(eig, w);
}

SymTensorField monitor_function(const SymTensorField& abs_h, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("monitor_function: alpha must be positive");
  SymTensorField out(abs_h.rows(), abs_h.cols());
  for (Index n = 0; n < abs_h.cols(); ++n) {
    for (Index m = 0; m < abs_h.rows(); ++m) out.set(m, n, monitor_tensor<double>(abs_h.at(m, n), alpha));
  }
  return out;
}

namespace {

Field smooth_once(const Field& f) {
  const Index M = f.rows(), N = f.cols();
  auto refl = [](Index i, Index size) { return i < 0 ? 1 : (i >= size ? size - 2 : i); };
  Field out(M, N);
  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      double s = 0.0;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const double w = (di == 0 ? 2.0 : 1.0) * (dj == 0 ? 2.0 : 1.0);
          s += w * f(refl(m + di, M), refl(n + dj, N));
        }
      }
      out(m, n) = s / 16.0;
    }
  }
  return out;
}

}  // namespace

SymTensorField smooth_monitor(const SymTensorField& monitor, int sweeps) {
  if (sweeps < 0) throw std::invalid_argument("smooth_monitor: sweeps must be non-negative");
  SymTensorField out = monitor;
  for (int s = 0; s < sweeps; ++s) {
    out.xx = smooth_once(out.xx);
    out.xy = smooth_once(out.xy);
    out.yy = smooth_once(out.yy);
  }
  return out;
}

MonitorField make_monitor_field(SymTensorField M, const MovingMesh& mesh, double alpha,
                                bool eulerian) {
  MonitorField mf;
  const Index rows = mesh.grid.M, cols = mesh.grid.N;
  mf.dMdx = SymTensorField(rows, cols);
  mf.dMdy = SymTensorField(rows, cols);
  if (eulerian) {
    const MetricTerms mt = compute_metrics(mesh);
    const double hx = mesh.grid.dxi(), he = mesh.grid.deta();
    auto grad = [&](const Field& f, Field& gx, Field& gy) {
      const Field f_xi = d_dxi<double>(f, hx), f_eta = d_deta<double>(f, he);
      gx = (mt.y_eta * f_xi - mt.y_xi * f_eta) / mt.J;
      gy = (-mt.x_eta * f_xi + mt.x_xi * f_eta) / mt.J;
    };
    grad(M.xx, mf.dMdx.xx, mf.dMdy.xx);
    grad(M.xy, mf.dMdx.xy, mf.dMdy.xy);
    grad(M.yy, mf.dMdx.yy, mf.dMdy.yy);
  }
  mf.M = std::move(M);
  mf.x_ref = mesh.x;
  mf.y_ref = mesh.y;
  mf.alpha = alpha;
  return mf;
}

MonitorField constant_monitor(const MovingMesh& mesh, const Eigen::Matrix2d& value) {
  SymTensorField M(mesh.grid.M, mesh.grid.N);
  M.xx.setConstant(value(0, 0));
  M.xy.setConstant(0.5 * (value(0, 1) + value(1, 0)));
  M.yy.setConstant(value(1, 1));
  return make_monitor_field(std::move(M), mesh, 1.0, false);
}

MonitorField monitor_from_hessian(const HessianField& H, const MovingMesh& mesh,
                                  const MonitorOptions& options, MonitorDiagnostics* diag) {
  const SymTensorField abs_h = absolute_hessian(H);
  const AlphaResult a_det = compute_alpha(abs_h, mesh);

  SymTensorField iso(abs_h.rows(), abs_h.cols());
  iso.xx = 0.5 * (abs_h.xx + abs_h.yy);
  iso.yy = iso.xx;
  const AlphaResult a_iso = compute_alpha(iso, mesh);

  double alpha = a_det.alpha;
  if (!a_det.degenerate) alpha = std::max(alpha, options.alpha_floor_ratio * a_iso.alpha);
  if (!(alpha > 0.0)) alpha = 1.0;

  if (diag) {
    diag->alpha_det = a_det;
    diag->alpha_iso = a_iso.alpha;
    diag->alpha = alpha;
  }
  SymTensorField M = smooth_monitor(monitor_function(abs_h, alpha), options.sweeps);
  return make_monitor_field(std::move(M), mesh, alpha, options.eulerian);
}

MonitorField build_monitor(const Field& E, const MovingMesh& mesh, const MonitorOptions& options,
                           MonitorDiagnostics* diag) {
  HessianDiagnostics hd;
  const HessianField H = recover_hessian(E, mesh, &hd);
  if (diag) diag->hessian = hd;
  return monitor_from_hessian(H, mesh, options, diag);
}

}  // namespace mmrad
