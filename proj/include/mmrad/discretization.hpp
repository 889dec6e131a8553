#pragma once

#include "mmrad/mesh_geometry.hpp"
#include "mmrad/physics_2t.hpp"
#include "mmrad/sparse_linalg.hpp"

#include <functional>
#include <vector>

namespace mmrad {

// Semi-discrete transformed 2T system on the reference grid,
//   du/dt = L u + g,   u = [E (all nodes), T (all nodes)],
// with nodes in m-fastest order. Diffusion is the conservative flux form
// (1/J) div_hat(D A grad_hat u) with half-index fluxes; boundary nodes carry
// half (or quarter) control volumes whose outer flux is supplied by the
// boundary condition.

enum class FieldBlock { E = 0, T = 1 };

enum class BoundarySide { xi_min, xi_max, eta_min, eta_max };

/// Physical gradient magnitude |grad E| at nodes via the inverse metric.
Field gradient_magnitude(const Field& E, const MetricTerms& metrics);

/// Coefficients evaluated at the frozen state (E*, T*) on a given mesh.
struct FrozenCoefficients {
  Field E_star;
  Field T_star;
  Field z;
  Field sigma;
  Field D_r;
  Field D_t;
};

FrozenCoefficients freeze_coefficients(const Field& E_star, const Field& T_star,
                                       const MovingMesh& mesh, const MetricTerms& metrics,
                                       const MaterialMap& material, const PhysicsParams& physics);

/// Manufactured forcing: volumetric sources, prescribed outward normal fluxes
/// q = D du/dn on edges whose homogeneous condition is Neumann, and the
/// right-hand side r of the Marshak conditions (1/4)E -+ E_x / (6 sigma) = r
/// (default: the inflow value on xi = 0 and 0 on xi = 1).
struct Forcing {
  std::function<double(double x, double y, double t)> source_E;
  std::function<double(double x, double y, double t)> source_T;
  std::function<double(double x, double y, double t, BoundarySide side)> flux_E;
  std::function<double(double x, double y, double t, BoundarySide side)> flux_T;
  std::function<double(double x, double y, double t, BoundarySide side)> robin_E;

  bool time_dependent_data() const { return source_E || source_T || flux_E || flux_T || robin_E; }
};

struct ProblemSetup {
  MaterialMap material;
  PhysicsParams physics;
  BoundarySpec boundary;
  /// Multiply the exchange source by J (as printed in the transformed system)
  /// instead of using the pointwise source.
  bool jacobian_weighted_source = false;
  Forcing forcing;
};

/// Triplet accumulator for L and the affine part g.
class Assembly {
 public:
  explicit Assembly(const ReferenceGrid& grid);

  const ReferenceGrid& grid() const { return grid_; }
  Index unknowns() const { return 2 * grid_.size(); }
  Index row(FieldBlock f, Index m, Index n) const {
    return static_cast<Index>(f) * grid_.size() + grid_.node(m, n);
  }

  void add(Index row, Index col, double value) {
    entries_.emplace_back(static_cast<int>(row), static_cast<int>(col), value);
  }
  Vector& rhs() { return rhs_; }
  const Vector& rhs() const { return rhs_; }

  SparseMatrix matrix() const;

 private:
  ReferenceGrid grid_;
  std::vector<Eigen::Triplet<double>> entries_;
  Vector rhs_;
};

/// (1/J) div_hat(D A grad_hat u) for one field with zero flux through the
/// domain boundary; boundary conditions add their fluxes separately.
void assemble_diffusion(Assembly& assembly, FieldBlock field, const Field& D,
                        const MetricTerms& metrics);

/// + b . grad_hat u with central differences (one-sided on boundaries).
void assemble_convection(Assembly& assembly, FieldBlock field, const MetricTerms& metrics);

/// Linearized exchange c sigma(T*) ((T*)^3 T - E) added to the E rows and
/// subtracted from the T rows; c = J when `jacobian_weighted`, else 1.
void assemble_coupling(Assembly& assembly, const FrozenCoefficients& frozen,
                       const MetricTerms& metrics, bool jacobian_weighted);

/// Boundary fluxes of the transformed boundary conditions on the boundary
/// control volumes, plus any prescribed forcing flux.
void apply_boundary_conditions(Assembly& assembly, const BoundarySpec& spec,
                               const MetricTerms& metrics, const FrozenCoefficients& frozen,
                               const MovingMesh& mesh, const Forcing& forcing = {}, double t = 0.0);

struct CoupledOperator {
  SparseMatrix L;
  Vector g;
  Field J;
};

CoupledOperator build_coupled_operator(const Field& E_star, const Field& T_star,
                                       const MovingMesh& mesh, const MeshVelocity& velocity,
                                       const ProblemSetup& setup, double t);

/// Residuals of the transformed boundary conditions evaluated with one-sided
/// differences (diagnostic form of the algebraic conditions).
struct BoundaryResidual {
  BoundarySide side;
  FieldBlock field;
  Index m;
  Index n;
  double value;
};

std::vector<BoundaryResidual> boundary_residuals(const Field& E, const Field& T,
                                                 const BoundarySpec& spec,
                                                 const MetricTerms& metrics,
                                                 const Field& sigma);

inline Vector stack_fields(const Field& E, const Field& T) {
  Vector u(E.size() + T.size());
  u.head(E.size()) = E.reshaped();
  u.tail(T.size()) = T.reshaped();
  return u;
}

inline void unstack_fields(const Vector& u, Field& E, Field& T) {
  E = u.head(E.size()).reshaped(E.rows(), E.cols()).array();
  T = u.tail(T.size()).reshaped(T.rows(), T.cols()).array();
}

}  // namespace mmrad
