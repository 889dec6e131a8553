#include "mmrad/mesh_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mmrad {

ReferenceGrid make_grid(Index M, Index N) {
  if (M < 3 || N < 3) {
    std::ostringstream os;
    os << "reference grid needs at least 3x3 nodes, got " << M << "x" << N;
    throw std::invalid_argument(os.str());
  }
  return ReferenceGrid{M, N};
}

MeshVelocity zero_velocity(const ReferenceGrid& grid) {
  return {Field::Zero(grid.M, grid.N), Field::Zero(grid.M, grid.N)};
}

MovingMesh uniform_mesh(const ReferenceGrid& grid, double t) {
  make_grid(grid.M, grid.N);
  MovingMesh mesh{grid, Field(grid.M, grid.N), Field(grid.M, grid.N), t};
  for (Index n = 0; n < grid.N; ++n) {
    for (Index m = 0; m < grid.M; ++m) {
      mesh.x(m, n) = grid.xi(m);
      mesh.y(m, n) = grid.eta(n);
    }
  }
  // Pin the far edges to exactly 1 regardless of rounding in m * dxi.
  mesh.x.row(grid.M - 1).setConstant(1.0);
  mesh.y.col(grid.N - 1).setConstant(1.0);
  return mesh;
}

MetricTerms compute_metrics(const MovingMesh& mesh, const MeshVelocity& velocity, bool check) {
  const auto& g = mesh.grid;
  MetricTerms mt;
  mt.x_xi = d_dxi<double>(mesh.x, g.dxi());
  mt.x_eta = d_deta<double>(mesh.x, g.deta());
  mt.y_xi = d_dxi<double>(mesh.y, g.dxi());
  mt.y_eta = d_deta<double>(mesh.y, g.deta());
  mt.J = mt.x_xi * mt.y_eta - mt.x_eta * mt.y_xi;

  // Under grading steeper than 3:1 at an edge the three-point one-sided
  // difference can reverse sign although every cell is valid; such boundary
  // nodes fall back to two-point differences.
  const Index M = g.M, N = g.N;
  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      if (!g.is_boundary(m, n) || mt.J(m, n) > 0.0) continue;
      if (m == 0 || m == M - 1) {
        const Index a = m == 0 ? 0 : M - 2;
        mt.x_xi(m, n) = (mesh.x(a + 1, n) - mesh.x(a, n)) / g.dxi();
        mt.y_xi(m, n) = (mesh.y(a + 1, n) - mesh.y(a, n)) / g.dxi();
      }
      if (n == 0 || n == N - 1) {
        const Index b = n == 0 ? 0 : N - 2;
        mt.x_eta(m, n) = (mesh.x(m, b + 1) - mesh.x(m, b)) / g.deta();
        mt.y_eta(m, n) = (mesh.y(m, b + 1) - mesh.y(m, b)) / g.deta();
      }
      mt.J(m, n) = mt.x_xi(m, n) * mt.y_eta(m, n) - mt.x_eta(m, n) * mt.y_xi(m, n);
    }
  }

  if (check) {
    for (Index n = 0; n < g.N; ++n) {
      for (Index m = 0; m < g.M; ++m) {
        if (!(mt.J(m, n) > 0.0)) {
          std::ostringstream os;
          os << "folded mesh: J = " << mt.J(m, n) << " at node (" << m << ", " << n << ")";
          throw MeshFoldError(os.str(), m, n, mt.J(m, n));
        }
      }
    }
  }

  const Field inv_j = mt.J.inverse();
  mt.a11 = (mt.x_eta.square() + mt.y_eta.square()) * inv_j;
  mt.a12 = -(mt.x_xi * mt.x_eta + mt.y_xi * mt.y_eta) * inv_j;
  mt.a22 = (mt.x_xi.square() + mt.y_xi.square()) * inv_j;
  mt.b1 = (mt.y_eta * velocity.vx - mt.x_eta * velocity.vy) * inv_j;
  mt.b2 = (-mt.y_xi * velocity.vx + mt.x_xi * velocity.vy) * inv_j;
  return mt;
}

MetricTerms compute_metrics(const MovingMesh& mesh, bool check) {
  return compute_metrics(mesh, zero_velocity(mesh.grid), check);
}

double min_jacobian(const MetricTerms& metrics) { return metrics.J.minCoeff(); }

double min_corner_jacobian(const MovingMesh& mesh) {
  const auto& g = mesh.grid;
  const double inv = 1.0 / (g.dxi() * g.deta());
  double jmin = std::numeric_limits<double>::infinity();
  auto corner = [&](Index mc, Index nc, Index ma, Index nb, double s) {
    // s = s_xi * s_eta accounts for orientation of the corner's two edges.
    const double ax = mesh.x(ma, nc) - mesh.x(mc, nc);
    const double ay = mesh.y(ma, nc) - mesh.y(mc, nc);
    const double bx = mesh.x(mc, nb) - mesh.x(mc, nc);
    const double by = mesh.y(mc, nb) - mesh.y(mc, nc);
    jmin = std::min(jmin, s * (ax * by - bx * ay) * inv);
  };
  for (Index n = 0; n + 1 < g.N; ++n) {
    for (Index m = 0; m + 1 < g.M; ++m) {
      corner(m, n, m + 1, n + 1, 1.0);
      corner(m + 1, n, m, n + 1, -1.0);
      corner(m, n + 1, m + 1, n, -1.0);
      corner(m + 1, n + 1, m, n, 1.0);
    }
  }
  return jmin;
}

MeshMotion make_motion(MovingMesh from, MovingMesh to) {
  if (!(from.grid == to.grid)) {
    throw std::invalid_argument("mesh motion endpoints must share a reference grid");
  }
  const double dt = to.t - from.t;
  if (!(dt > 0.0)) {
    throw std::invalid_argument("mesh motion needs t_{n+1} > t_n");
  }
  return MeshMotion{std::move(from), std::move(to), dt};
}

MovingMesh mesh_at_time(const MeshMotion& motion, double t) {
  const double t0 = motion.t_begin();
  const double t1 = motion.t_end();
  const double slack = 1e-12 * std::max(1.0, std::abs(t1));
  if (t < t0 - slack || t > t1 + slack) {
    std::ostringstream os;
    os << "time " << t << " outside mesh motion interval [" << t0 << ", " << t1 << "]";
    throw std::out_of_range(os.str());
  }
  if (t <= t0) return motion.from;
  if (t >= t1) return motion.to;
  const double w1 = (t - t0) / motion.dt;
  const double w0 = (t0 + motion.dt - t) / motion.dt;
  MovingMesh mesh{motion.from.grid, w1 * motion.to.x + w0 * motion.from.x,
                  w1 * motion.to.y + w0 * motion.from.y, t};
  return mesh;
}

MeshVelocity motion_velocity(const MeshMotion& motion) {
  return {(motion.to.x - motion.from.x) / motion.dt, (motion.to.y - motion.from.y) / motion.dt};
}

namespace {

MovingMesh refine_impl(const MovingMesh& coarse, int r) {
  const auto& cg = coarse.grid;
  const ReferenceGrid fg{r * (cg.M - 1) + 1, r * (cg.N - 1) + 1};
  MovingMesh fine{fg, Field(fg.M, fg.N), Field(fg.M, fg.N), coarse.t};
  for (Index J = 0; J < fg.N; ++J) {
    const Index n = std::min<Index>(J / r, cg.N - 2);
    const double t = static_cast<double>(J - n * r) / r;
    for (Index I = 0; I < fg.M; ++I) {
      const Index m = std::min<Index>(I / r, cg.M - 2);
      const double s = static_cast<double>(I - m * r) / r;
      auto blend = [&](const Field& f) {
        return (1 - s) * (1 - t) * f(m, n) + s * (1 - t) * f(m + 1, n) + (1 - s) * t * f(m, n + 1) +
               s * t * f(m + 1, n + 1);
      };
      fine.x(I, J) = blend(coarse.x);
      fine.y(I, J) = blend(coarse.y);
    }
  }
  // Coarse nodes are reproduced exactly.
  for (Index n = 0; n < cg.N; ++n) {
    for (Index m = 0; m < cg.M; ++m) {
      fine.x(r * m, r * n) = coarse.x(m, n);
      fine.y(r * m, r * n) = coarse.y(m, n);
    }
  }
  return fine;
}

}  // namespace

MovingMesh refine_uniform(const MovingMesh& coarse, int factor) {
  if (factor < 2) {
    throw std::invalid_argument("refinement factor must be >= 2");
  }
  MovingMesh fine = refine_impl(coarse, factor);
  const double jmin = min_corner_jacobian(fine);
  if (!(jmin > 0.0)) {
    throw MeshFoldError("refined mesh folds", -1, -1, jmin);
  }
  return fine;
}

Field restrict_injection(const Field& fine, const ReferenceGrid& coarse, int factor) {
  if (fine.rows() != factor * (coarse.M - 1) + 1 || fine.cols() != factor * (coarse.N - 1) + 1) {
    throw std::invalid_argument("fine field size does not match coarse grid and factor");
  }
  Field out(coarse.M, coarse.N);
  for (Index n = 0; n < coarse.N; ++n) {
    for (Index m = 0; m < coarse.M; ++m) out(m, n) = fine(factor * m, factor * n);
  }
  return out;
}

Field trapezoid_weights(const ReferenceGrid& grid) {
  Field w = Field::Constant(grid.M, grid.N, grid.dxi() * grid.deta());
  w.row(0) *= 0.5;
  w.row(grid.M - 1) *= 0.5;
  w.col(0) *= 0.5;
  w.col(grid.N - 1) *= 0.5;
  return w;
}

double sample_field(const MovingMesh& mesh, const Field& f, double x, double y) {
  const auto& g = mesh.grid;
  for (Index n = 0; n + 1 < g.N; ++n) {
    for (Index m = 0; m + 1 < g.M; ++m) {
      const double x00 = mesh.x(m, n), x10 = mesh.x(m + 1, n);
      const double x01 = mesh.x(m, n + 1), x11 = mesh.x(m + 1, n + 1);
      const double y00 = mesh.y(m, n), y10 = mesh.y(m + 1, n);
      const double y01 = mesh.y(m, n + 1), y11 = mesh.y(m + 1, n + 1);
      const double tol = 1e-12;
      if (x < std::min({x00, x10, x01, x11}) - tol || x > std::max({x00, x10, x01, x11}) + tol ||
          y < std::min({y00, y10, y01, y11}) - tol || y > std::max({y00, y10, y01, y11}) + tol) {
        continue;
      }
      // Newton iteration for the bilinear inverse.
      double s = 0.5, t = 0.5;
      for (int it = 0; it < 30; ++it) {
        const double px = (1 - s) * (1 - t) * x00 + s * (1 - t) * x10 + (1 - s) * t * x01 + s * t * x11;
        const double py = (1 - s) * (1 - t) * y00 + s * (1 - t) * y10 + (1 - s) * t * y01 + s * t * y11;
        const double rx = px - x, ry = py - y;
        const double dxs = (1 - t) * (x10 - x00) + t * (x11 - x01);
        const double dxt = (1 - s) * (x01 - x00) + s * (x11 - x10);
        const double dys = (1 - t) * (y10 - y00) + t * (y11 - y01);
        const double dyt = (1 - s) * (y01 - y00) + s * (y11 - y10);
        const double det = dxs * dyt - dxt * dys;
        if (det == 0.0) break;
        const double ds = (dyt * rx - dxt * ry) / det;
        const double dt = (-dys * rx + dxs * ry) / det;
        s -= ds;
        t -= dt;
        if (std::abs(ds) + std::abs(dt) < 1e-14) break;
      }
      const double eps = 1e-9;
      if (s < -eps || s > 1 + eps || t < -eps || t > 1 + eps) continue;
      s = std::clamp(s, 0.0, 1.0);
      t = std::clamp(t, 0.0, 1.0);
      return (1 - s) * (1 - t) * f(m, n) + s * (1 - t) * f(m + 1, n) + (1 - s) * t * f(m, n + 1) +
             s * t * f(m + 1, n + 1);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace mmrad
