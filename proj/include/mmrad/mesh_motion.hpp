#pragma once

#include "mmrad/hessian_monitor.hpp"
#include "mmrad/mesh_geometry.hpp"
#include "mmrad/meshing_functional.hpp"

namespace mmrad {

struct MeshingParams {
  double tau = 0.01;
  double theta = 0.1;
  int sweeps = 4;
  int substeps = 1;
  double alpha_floor_ratio = 0.1;
  int pre_adapt_cycles = 5;
  int max_halvings = 10;
  bool eulerian_monitor = true;

  MonitorOptions monitor_options() const { return {sweeps, alpha_floor_ratio, eulerian_monitor}; }
};

void validate(const MeshingParams& params);

struct MeshStepReport {
  int halvings = 0;
  bool zero_step = false;
  double value_before = 0.0;
  double value_after = 0.0;
};

/// 1-D gradient flow of arc-length equidistribution on each edge with edge
/// monitor m = sqrt(t^T M t), x_t = (1/tau) (m x_xi)_xi / m, backward Euler
/// with m frozen; corners stay fixed. Interior nodes are returned unchanged.
MovingMesh move_boundary_points(const MovingMesh& mesh, const MonitorField& monitor,
                                const MeshingParams& params, double dt);

/// One frozen-coefficient backward Euler step of the MMPDE for the interior
/// nodes with the boundary held fixed,
///   (P^{-1} + (dt/tau) H) delta = -(dt/tau) g,
/// where g is the coordinate gradient of I_h, H its clipped Hessian and
/// P^{-1} the per-node block (J w h_xi h_eta / sqrt(det M)) (F F^T)^{-1}.
/// The step is halved until every corner Jacobian is positive and I_h does
/// not increase; if no halving gives descent the mesh is returned unchanged.
MovingMesh mmpde_step(const MovingMesh& mesh, const MonitorField& monitor,
                      const MeshingParams& params, double dt, MeshStepReport* report = nullptr);

/// Boundary nodes from move_boundary_points, interior nodes from the MMPDE
/// step coupled to the boundary displacement; the step is halved only to keep
/// the mesh valid, and a substep with no valid halving leaves the mesh as is
/// (reported as a zero step). Repeated `params.substeps` times with dt / substeps.
MovingMesh advance_mesh(const MovingMesh& mesh, const MonitorField& monitor,
                        const MeshingParams& params, double dt, MeshStepReport* report = nullptr);

struct TwoLevelMeshes {
  MovingMesh coarse;
  MovingMesh fine;
};

/// Hessian of the fine solution injected to the coarse nodes, monitor and
/// mesh step on the coarse mesh, then uniform refinement. factor == 1 is the
/// one-level method.
TwoLevelMeshes two_level_cycle(const MovingMesh& coarse, const MovingMesh& fine, const Field& E_fine,
                               int factor, const MeshingParams& params, double dt,
                               MonitorDiagnostics* diagnostics = nullptr);

}  // namespace mmrad
