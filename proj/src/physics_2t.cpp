#include "mmrad/physics_2t.hpp"

#include <cmath>

namespace mmrad {

double MaterialMap::at(double x, double y) const {
  for (const auto& r : regions) {
    if (x > r.x0 && x < r.x1 && y > r.y0 && y < r.y1) return r.z;
  }
  return background;
}

Field atomic_number_field(const MovingMesh& mesh, const MaterialMap& map) {
  Field z(mesh.grid.M, mesh.grid.N);
  for (Index n = 0; n < mesh.grid.N; ++n) {
    for (Index m = 0; m < mesh.grid.M; ++m) z(m, n) = map.at(mesh.x(m, n), mesh.y(m, n));
  }
  return z;
}

std::string to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::marshak_inflow_outflow:
      return "marshak";
    case BoundaryKind::fully_insulated:
      return "insulated";
  }
  return "unknown";
}

BoundaryKind parse_boundary_kind(const std::string& name) {
  if (name == "marshak" || name == "marshak-inflow-outflow") return BoundaryKind::marshak_inflow_outflow;
  if (name == "insulated" || name == "fully-insulated") return BoundaryKind::fully_insulated;
  throw std::invalid_argument("unknown boundary kind '" + name + "'");
}

Preset parse_preset(const std::string& name) {
  if (name == "example1") return Preset::example1;
  if (name == "example2") return Preset::example2;
  if (name == "example3") return Preset::example3;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::string to_string(Preset preset) {
  switch (preset) {
    case Preset::example1:
      return "example1";
    case Preset::example2:
      return "example2";
    case Preset::example3:
      return "example3";
  }
  return "unknown";
}

std::vector<std::string> preset_names() { return {"example1", "example2", "example3"}; }

MaterialMap preset_material(Preset preset) {
  constexpr double third = 1.0 / 3.0;
  switch (preset) {
    case Preset::example1:
      return {{{third, 2 * third, third, 2 * third, 5.0}}, 1.0};
    case Preset::example2:
      return {{{third, 2 * third, third, 2 * third, 10.0}}, 1.0};
    case Preset::example3:
      return {{{3.0 / 16, 7.0 / 16, 9.0 / 16, 13.0 / 16, 10.0},
               {9.0 / 16, 13.0 / 16, 3.0 / 16, 7.0 / 16, 10.0}},
              1.0};
  }
  throw std::invalid_argument("unknown preset");
}

BoundarySpec preset_boundary(Preset preset) {
  if (preset == Preset::example3) return {BoundaryKind::fully_insulated, 1.0};
  return {BoundaryKind::marshak_inflow_outflow, 1.0};
}

double preset_initial_energy(Preset preset, double x, double y) {
  switch (preset) {
    case Preset::example1:
    case Preset::example2:
      return (1.0 - std::tanh(10.0 * x)) * (1.0 - 1e-5) + 1e-5;
    case Preset::example3:
      return 0.001 + 100.0 * std::exp(-100.0 * (x * x + y * y));
  }
  throw std::invalid_argument("unknown preset");
}

StateFields initial_state(Preset preset, const MovingMesh& mesh) {
  StateFields s{Field(mesh.grid.M, mesh.grid.N), Field(mesh.grid.M, mesh.grid.N), mesh.t};
  for (Index n = 0; n < mesh.grid.N; ++n) {
    for (Index m = 0; m < mesh.grid.M; ++m) {
      s.E(m, n) = preset_initial_energy(preset, mesh.x(m, n), mesh.y(m, n));
    }
  }
  s.T = s.E.sqrt().sqrt();
  return s;
}

}  // namespace mmrad
