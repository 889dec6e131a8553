#pragma once

#include "mmrad/mesh_geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmrad {

// ---------------------------------------------------------------------------
// Coefficients of the gray two-temperature model
//   E_t - div(D_r grad E) =  sigma_a (T^4 - E)
//   T_t - div(D_t grad T) = -sigma_a (T^4 - E)
// ---------------------------------------------------------------------------

/// sigma_a = z^3 / T^3.
template <typename Scalar>
Scalar opacity(const Scalar& T, const Scalar& z) {
  if (!(T > Scalar(0))) throw std::domain_error("opacity: temperature must be positive");
  return (z * z * z) / (T * T * T);
}

/// Flux-limited radiation diffusion coefficient 1 / (3 sigma_a + |grad E| / E).
template <typename Scalar>
Scalar radiation_diffusion_coeff(const Scalar& E, const Scalar& grad_norm, const Scalar& sigma_a) {
  if (!(E > Scalar(0))) throw std::domain_error("radiation_diffusion_coeff: energy must be positive");
  return Scalar(1) / (Scalar(3) * sigma_a + grad_norm / E);
}

/// Spitzer-Harm conduction kappa T^{5/2}.
template <typename Scalar>
Scalar material_conduction_coeff(const Scalar& T, const Scalar& kappa) {
  if (!(T > Scalar(0))) throw std::domain_error("material_conduction_coeff: temperature must be positive");
  using std::sqrt;
  return kappa * T * T * sqrt(T);
}

template <typename Scalar>
struct CouplingSource {
  Scalar s_E;
  Scalar s_T;
};

/// (sigma_a (T^4 - E), -sigma_a (T^4 - E)); the second entry is the exact negation.
template <typename Scalar>
CouplingSource<Scalar> coupling_source(const Scalar& E, const Scalar& T, const Scalar& z) {
  const Scalar s = opacity(T, z) * (T * T * T * T - E);
  return {s, -s};
}

struct PhysicsParams {
  double kappa = 0.01;
};

struct MaterialRegion {
  double x0, x1, y0, y1;
  double z;
};

/// Piecewise-constant atomic number; regions are open rectangles, so points on
/// a region edge take the background value.
struct MaterialMap {
  std::vector<MaterialRegion> regions;
  double background = 1.0;

  double at(double x, double y) const;
};

inline double atomic_number_at(double x, double y, const MaterialMap& map) { return map.at(x, y); }

Field atomic_number_field(const MovingMesh& mesh, const MaterialMap& map);

enum class BoundaryKind { marshak_inflow_outflow, fully_insulated };

/// Marshak: Robin inflow (1/4)E - (1/(6 sigma_a)) E_x = 1 on x = 0, outflow
/// (1/4)E + (1/(6 sigma_a)) E_x = 0 on x = 1, T_x = 0 there, and insulated
/// y edges. Fully insulated: homogeneous Neumann on every edge for E and T.
struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::marshak_inflow_outflow;
  double inflow_value = 1.0;
};

std::string to_string(BoundaryKind kind);
BoundaryKind parse_boundary_kind(const std::string& name);

struct StateFields {
  Field E;
  Field T;
  double t = 0.0;
};

enum class Preset { example1, example2, example3 };

Preset parse_preset(const std::string& name);
std::string to_string(Preset preset);
std::vector<std::string> preset_names();

MaterialMap preset_material(Preset preset);
BoundarySpec preset_boundary(Preset preset);

/// Initial energy density of a preset at (x, y).
double preset_initial_energy(Preset preset, double x, double y);

/// Nodal E from the preset formula and T = E^{1/4}.
StateFields initial_state(Preset preset, const MovingMesh& mesh);

}  // namespace mmrad
