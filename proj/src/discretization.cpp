#include "mmrad/discretization.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace mmrad {

namespace {

/// Up to three (node, weight) pairs of a first-derivative stencil.
struct Stencil3 {
  std::array<Index, 3> node{};
  std::array<double, 3> w{};
  int size = 0;
};

Stencil3 xi_stencil(const ReferenceGrid& g, Index m, Index n) {
  const double s = 0.5 / g.dxi();
  if (m == 0) return {{g.node(0, n), g.node(1, n), g.node(2, n)}, {-3 * s, 4 * s, -s}, 3};
  if (m == g.M - 1) {
    return {{g.node(m, n), g.node(m - 1, n), g.node(m - 2, n)}, {3 * s, -4 * s, s}, 3};
  }
  return {{g.node(m + 1, n), g.node(m - 1, n), 0}, {s, -s, 0.0}, 2};
}

Stencil3 eta_stencil(const ReferenceGrid& g, Index m, Index n) {
  const double s = 0.5 / g.deta();
  if (n == 0) return {{g.node(m, 0), g.node(m, 1), g.node(m, 2)}, {-3 * s, 4 * s, -s}, 3};
  if (n == g.N - 1) {
    return {{g.node(m, n), g.node(m, n - 1), g.node(m, n - 2)}, {3 * s, -4 * s, s}, 3};
  }
  return {{g.node(m, n + 1), g.node(m, n - 1), 0}, {s, -s, 0.0}, 2};
}

double control_width_xi(const ReferenceGrid& g, Index m) {
  return (m == 0 || m == g.M - 1) ? 0.5 * g.dxi() : g.dxi();
}

double control_width_eta(const ReferenceGrid& g, Index n) {
  return (n == 0 || n == g.N - 1) ? 0.5 * g.deta() : g.deta();
}

}  // namespace

Field gradient_magnitude(const Field& E, const MetricTerms& mt) {
  const double hx = 1.0 / static_cast<double>(E.rows() - 1);
  const double he = 1.0 / static_cast<double>(E.cols() - 1);
  const Field e_xi = d_dxi<double>(E, hx);
  const Field e_eta = d_deta<double>(E, he);
  const Field gx = (mt.y_eta * e_xi - mt.y_xi * e_eta) / mt.J;
  const Field gy = (-mt.x_eta * e_xi + mt.x_xi * e_eta) / mt.J;
  return (gx.square() + gy.square()).sqrt();
}

FrozenCoefficients freeze_coefficients(const Field& E_star, const Field& T_star,
                                       const MovingMesh& mesh, const MetricTerms& metrics,
                                       const MaterialMap& material, const PhysicsParams& physics) {
  FrozenCoefficients fc;
  fc.E_star = E_star;
  fc.T_star = T_star;
  fc.z = atomic_number_field(mesh, material);
  const Field grad = gradient_magnitude(E_star, metrics);
  const Index M = mesh.grid.M, N = mesh.grid.N;
  fc.sigma.resize(M, N);
  fc.D_r.resize(M, N);
  fc.D_t.resize(M, N);
  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      fc.sigma(m, n) = opacity(T_star(m, n), fc.z(m, n));
      fc.D_r(m, n) = radiation_diffusion_coeff(E_star(m, n), grad(m, n), fc.sigma(m, n));
      fc.D_t(m, n) = material_conduction_coeff(T_star(m, n), physics.kappa);
    }
  }
  return fc;
}

Assembly::Assembly(const ReferenceGrid& grid) : grid_(grid), rhs_(Vector::Zero(2 * grid.size())) {
  entries_.reserve(static_cast<std::size_t>(2 * grid.size() * 40));
}

namespace {

// Assemblies on one grid emit the same (row, col) sequence step after step,
// so the compressed pattern and each entry's slot in it are computed once.
struct PatternCache {
  std::vector<Eigen::Triplet<double>> coords;
  SparseMatrix pattern;
  std::vector<Index> slot;

  bool matches(const std::vector<Eigen::Triplet<double>>& entries, Index n) const {
    if (pattern.rows() != n || coords.size() != entries.size()) return false;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (coords[k].row() != entries[k].row() || coords[k].col() != entries[k].col()) return false;
    }
    return true;
  }

  void rebuild(const std::vector<Eigen::Triplet<double>>& entries, Index n) {
    coords = entries;
    pattern.resize(n, n);
    pattern.setFromTriplets(entries.begin(), entries.end());
    pattern.makeCompressed();
    slot.resize(entries.size());
    const int* outer = pattern.outerIndexPtr();
    const int* inner = pattern.innerIndexPtr();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const int r = entries[k].row();
      slot[k] = std::lower_bound(inner + outer[r], inner + outer[r + 1], entries[k].col()) - inner;
    }
  }
};

}  // namespace

SparseMatrix Assembly::matrix() const {
  thread_local PatternCache cache;
  if (!cache.matches(entries_, unknowns())) cache.rebuild(entries_, unknowns());
  SparseMatrix L = cache.pattern;
  double* v = L.valuePtr();
  std::fill(v, v + L.nonZeros(), 0.0);
  for (std::size_t k = 0; k < entries_.size(); ++k) v[cache.slot[k]] += entries_[k].value();
  return L;
}

void assemble_diffusion(Assembly& a, FieldBlock field, const Field& D, const MetricTerms& mt) {
  const auto& g = a.grid();
  const Index M = g.M, N = g.N;
  const Index off = static_cast<Index>(field) * g.size();
  const double hx = g.dxi(), he = g.deta();
  const Field k11 = D * mt.a11;
  const Field k12 = D * mt.a12;
  const Field k22 = D * mt.a22;

  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      if (!(D(m, n) > 0.0)) {
        std::ostringstream os;
        os << "non-positive frozen diffusion coefficient at node (" << m << ", " << n << ")";
        throw std::domain_error(os.str());
      }
    }
  }

  // Faces normal to xi between (m, n) and (m + 1, n).
  for (Index n = 0; n < N; ++n) {
    for (Index m = 0; m + 1 < M; ++m) {
      const double K11 = 0.5 * (k11(m, n) + k11(m + 1, n));
      const double K12 = 0.5 * (k12(m, n) + k12(m + 1, n));
      const Index rl = off + g.node(m, n);
      const Index rr = off + g.node(m + 1, n);
      const double sl = 1.0 / (mt.J(m, n) * control_width_xi(g, m));
      const double sr = -1.0 / (mt.J(m + 1, n) * control_width_xi(g, m + 1));
      auto emit = [&](Index col, double w) {
        a.add(rl, off + col, sl * w);
        a.add(rr, off + col, sr * w);
      };
      emit(g.node(m + 1, n), K11 / hx);
      emit(g.node(m, n), -K11 / hx);
      for (Index mm : {m, m + 1}) {
        const Stencil3 s = eta_stencil(g, mm, n);
        for (int k = 0; k < s.size; ++k) emit(s.node[k], 0.5 * K12 * s.w[k]);
      }
    }
  }

  // Faces normal to eta between (m, n) and (m, n + 1).
  for (Index n = 0; n + 1 < N; ++n) {
    for (Index m = 0; m < M; ++m) {
      const double K22 = 0.5 * (k22(m, n) + k22(m, n + 1));
      const double K21 = 0.5 * (k12(m, n) + k12(m, n + 1));
      const Index rb = off + g.node(m, n);
      const Index rt = off + g.node(m, n + 1);
      const double sb = 1.0 / (mt.J(m, n) * control_width_eta(g, n));
      const double st = -1.0 / (mt.J(m, n + 1) * control_width_eta(g, n + 1));
      auto emit = [&](Index col, double w) {
        a.add(rb, off + col, sb * w);
        a.add(rt, off + col, st * w);
      };
      emit(g.node(m, n + 1), K22 / he);
      emit(g.node(m, n), -K22 / he);
      for (Index nn : {n, n + 1}) {
        const Stencil3 s = xi_stencil(g, m, nn);
        for (int k = 0; k < s.size; ++k) emit(s.node[k], 0.5 * K21 * s.w[k]);
      }
    }
  }
}

void assemble_convection(Assembly& a, FieldBlock field, const MetricTerms& mt) {
  const auto& g = a.grid();
  const Index off = static_cast<Index>(field) * g.size();
  for (Index n = 0; n < g.N; ++n) {
    for (Index m = 0; m < g.M; ++m) {
      // Zero velocity still emits entries so the pattern stays fixed.
      const double b1 = mt.b1(m, n), b2 = mt.b2(m, n);
      const Index r = off + g.node(m, n);
      const Stencil3 sx = xi_stencil(g, m, n);
      for (int k = 0; k < sx.size; ++k) a.add(r, off + sx.node[k], b1 * sx.w[k]);
      const Stencil3 se = eta_stencil(g, m, n);
      for (int k = 0; k < se.size; ++k) a.add(r, off + se.node[k], b2 * se.w[k]);
    }
  }
}

void assemble_coupling(Assembly& a, const FrozenCoefficients& fc, const MetricTerms& mt,
                       bool jacobian_weighted) {
  const auto& g = a.grid();
  for (Index n = 0; n < g.N; ++n) {
    for (Index m = 0; m < g.M; ++m) {
      const double ts = fc.T_star(m, n);
      if (!(ts > 0.0)) throw std::domain_error("assemble_coupling: T* must be positive");
      const double c = (jacobian_weighted ? mt.J(m, n) : 1.0) * fc.sigma(m, n);
      const double t3 = ts * ts * ts;
      const Index re = a.row(FieldBlock::E, m, n);
      const Index rt = a.row(FieldBlock::T, m, n);
      a.add(re, re, -c);
      a.add(re, rt, c * t3);
      a.add(rt, re, c);
      a.add(rt, rt, -c * t3);
    }
  }
}

void apply_boundary_conditions(Assembly& a, const BoundarySpec& spec, const MetricTerms& mt,
                               const FrozenCoefficients& fc, const MovingMesh& mesh,
                               const Forcing& forcing, double t) {
  const auto& g = a.grid();
  const Index M = g.M, N = g.N;

  // Outer boundary flux F (component of D A grad_hat u normal to the edge)
  // enters the boundary control volume as -F / (J w) on xi_min / eta_min and
  // +F / (J w) on xi_max / eta_max, with w the half control width.
  auto prescribed = [&](FieldBlock field, BoundarySide side, Index m, Index n) {
    const auto& fn = field == FieldBlock::E ? forcing.flux_E : forcing.flux_T;
    if (!fn) return;
    const double q = fn(mesh.x(m, n), mesh.y(m, n), t, side);
    double inflow = 0.0;
    switch (side) {
      case BoundarySide::xi_min:
      case BoundarySide::xi_max:
        inflow = mt.y_eta(m, n) * q / (mt.J(m, n) * control_width_xi(g, m));
        break;
      case BoundarySide::eta_min:
      case BoundarySide::eta_max:
        inflow = mt.x_xi(m, n) * q / (mt.J(m, n) * control_width_eta(g, n));
        break;
    }
    a.rhs()(a.row(field, m, n)) += inflow;
  };

  const bool marshak = spec.kind == BoundaryKind::marshak_inflow_outflow;
  if (spec.kind != BoundaryKind::marshak_inflow_outflow && spec.kind != BoundaryKind::fully_insulated) {
    throw std::invalid_argument("apply_boundary_conditions: unknown boundary kind");
  }

  for (Index n = 0; n < N; ++n) {
    for (Index m : {Index(0), M - 1}) {
      const BoundarySide side = m == 0 ? BoundarySide::xi_min : BoundarySide::xi_max;
      if (marshak) {
        // E_x = 6 sigma (E/4 - r) on xi = 0 and E_x = 6 sigma (r - E/4) on
        // xi = 1; the outer flux D y_eta E_x enters with the outward sign.
        const double w = mt.J(m, n) * control_width_xi(g, m);
        const double c = fc.D_r(m, n) * mt.y_eta(m, n) * fc.sigma(m, n);
        const double data = forcing.robin_E ? forcing.robin_E(mesh.x(m, n), mesh.y(m, n), t, side)
                                            : (m == 0 ? spec.inflow_value : 0.0);
        const Index r = a.row(FieldBlock::E, m, n);
        a.add(r, r, -1.5 * c / w);
        a.rhs()(r) += 6.0 * c * data / w;
      } else {
        prescribed(FieldBlock::E, side, m, n);
      }
      prescribed(FieldBlock::T, side, m, n);
    }
  }
  for (Index m = 0; m < M; ++m) {
    for (Index n : {Index(0), N - 1}) {
      const BoundarySide side = n == 0 ? BoundarySide::eta_min : BoundarySide::eta_max;
      prescribed(FieldBlock::E, side, m, n);
      prescribed(FieldBlock::T, side, m, n);
    }
  }
}

CoupledOperator build_coupled_operator(const Field& E_star, const Field& T_star,
                                       const MovingMesh& mesh, const MeshVelocity& velocity,
                                       const ProblemSetup& setup, double t) {
  const MetricTerms mt = compute_metrics(mesh, velocity);
  const FrozenCoefficients fc =
      freeze_coefficients(E_star, T_star, mesh, mt, setup.material, setup.physics);
  Assembly a(mesh.grid);
  assemble_diffusion(a, FieldBlock::E, fc.D_r, mt);
  assemble_diffusion(a, FieldBlock::T, fc.D_t, mt);
  assemble_convection(a, FieldBlock::E, mt);
  assemble_convection(a, FieldBlock::T, mt);
  assemble_coupling(a, fc, mt, setup.jacobian_weighted_source);
  apply_boundary_conditions(a, setup.boundary, mt, fc, mesh, setup.forcing, t);

  const auto& g = mesh.grid;
  if (setup.forcing.source_E || setup.forcing.source_T) {
    for (Index n = 0; n < g.N; ++n) {
      for (Index m = 0; m < g.M; ++m) {
        if (setup.forcing.source_E) {
          a.rhs()(a.row(FieldBlock::E, m, n)) += setup.forcing.source_E(mesh.x(m, n), mesh.y(m, n), t);
        }
        if (setup.forcing.source_T) {
          a.rhs()(a.row(FieldBlock::T, m, n)) += setup.forcing.source_T(mesh.x(m, n), mesh.y(m, n), t);
        }
      }
    }
  }
  return {a.matrix(), a.rhs(), mt.J};
}

std::vector<BoundaryResidual> boundary_residuals(const Field& E, const Field& T,
                                                 const BoundarySpec& spec, const MetricTerms& mt,
                                                 const Field& sigma) {
  const Index M = E.rows(), N = E.cols();
  const double hx = 1.0 / static_cast<double>(M - 1);
  const double he = 1.0 / static_cast<double>(N - 1);
  const Field e_xi = d_dxi<double>(E, hx), e_eta = d_deta<double>(E, he);
  const Field t_xi = d_dxi<double>(T, hx), t_eta = d_deta<double>(T, he);
  std::vector<BoundaryResidual> out;

  // eta = 0, 1: (-x_eta / (x_xi y_eta)) u_xi + u_eta / y_eta = 0 for E and T.
  for (Index n : {Index(0), N - 1}) {
    const BoundarySide side = n == 0 ? BoundarySide::eta_min : BoundarySide::eta_max;
    for (Index m = 0; m < M; ++m) {
      const double c1 = -mt.x_eta(m, n) / (mt.x_xi(m, n) * mt.y_eta(m, n));
      const double c2 = 1.0 / mt.y_eta(m, n);
      out.push_back({side, FieldBlock::E, m, n, c1 * e_xi(m, n) + c2 * e_eta(m, n)});
      out.push_back({side, FieldBlock::T, m, n, c1 * t_xi(m, n) + c2 * t_eta(m, n)});
    }
  }
  // xi = 0, 1: normal derivative (1/x_xi) u_xi - (y_xi / (x_xi y_eta)) u_eta.
  for (Index m : {Index(0), M - 1}) {
    const BoundarySide side = m == 0 ? BoundarySide::xi_min : BoundarySide::xi_max;
    for (Index n = 0; n < N; ++n) {
      const double c1 = 1.0 / mt.x_xi(m, n);
      const double c2 = -mt.y_xi(m, n) / (mt.x_xi(m, n) * mt.y_eta(m, n));
      const double dE = c1 * e_xi(m, n) + c2 * e_eta(m, n);
      const double dT = c1 * t_xi(m, n) + c2 * t_eta(m, n);
      if (spec.kind == BoundaryKind::marshak_inflow_outflow) {
        const double k = 1.0 / (6.0 * sigma(m, n));
        const double value =
            m == 0 ? 0.25 * E(m, n) - k * dE - spec.inflow_value : 0.25 * E(m, n) + k * dE;
        out.push_back({side, FieldBlock::E, m, n, value});
      } else {
        out.push_back({side, FieldBlock::E, m, n, dE});
      }
      out.push_back({side, FieldBlock::T, m, n, dT});
    }
  }
  return out;
}

}  // namespace mmrad
