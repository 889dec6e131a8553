#pragma once

#include "mmrad/discretization.hpp"
#include "mmrad/mesh_geometry.hpp"
#include "mmrad/physics_2t.hpp"
#include "mmrad/sparse_linalg.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mmrad {

/// Two-stage SDIRK: a = [[g, 0], [1 - g, g]], b = [1 - g, g], c = [g, 1].
struct SdirkTableau {
  double gamma = 1.0 - 0.70710678118654752440;

  double a21() const { return 1.0 - gamma; }
  double b1() const { return 1.0 - gamma; }
  double b2() const { return gamma; }
  double c1() const { return gamma; }
  double c2() const { return 1.0; }

  /// gamma = 1 - sqrt(2)/2: L-stable, stiffly accurate, order 2.
  static SdirkTableau l_stable() { return {}; }

  /// R(z) = 1 + z b^T (I - z A)^{-1} 1.
  double stability_function(double z) const;
};

struct LinearSystem {
  SparseMatrix L;
  Vector g;
};

/// du/dt = L(t) u + g(t). When `time_invariant` is set the family is evaluated
/// once per step and its stage matrix factorized once.
struct OperatorFamily {
  std::function<LinearSystem(double t)> at;
  bool time_invariant = false;
};

struct StepStats {
  double assembly_seconds = 0.0;
  double solve_seconds = 0.0;
  int factorizations = 0;
};

Vector sdirk2_step(const OperatorFamily& family, const Vector& u_n, double t_n, double dt,
                   const SdirkTableau& tableau = SdirkTableau::l_stable(),
                   StepStats* stats = nullptr);

struct CutoffEvent {
  long step = 0;
  double time = 0.0;
  FieldBlock field = FieldBlock::E;
  Index count = 0;
};

struct CutoffPolicy {
  double threshold = 0.0;
  bool enabled = true;
  std::vector<CutoffEvent> log;

  Index events_for_step(long step) const;
};

/// 30 / ((M - 1)(N - 1)).
double cutoff_threshold(Index M, Index N);

CutoffPolicy make_cutoff_policy(const ReferenceGrid& grid);

/// Values below the threshold (including negative and NaN-free values) are
/// replaced by the threshold; one log entry per field with clipped nodes.
StateFields apply_cutoff(const StateFields& state, CutoffPolicy& policy, long step);

void write_cutoff_log(const std::string& path, const CutoffPolicy& policy);

/// Constant dt with a geometric start-up ramp from dt_start over ramp_steps;
/// the final step is shortened to land on t_end.
struct StepSchedule {
  double dt = 1e-3;
  double dt_start = 1e-5;
  int ramp_steps = 20;
  double t_end = 1.0;

  double step_size(long step, double t) const;
  std::vector<double> sizes(double t0 = 0.0) const;
};

/// Frozen state used by the corrector. `interpolated` freezes at the state
/// interpolated linearly in time between (E_n, T_n) and the predictor result;
/// `end_state` freezes at the predictor result for the whole step.
enum class CorrectorFreeze { interpolated, end_state };

struct PredictorCorrectorOptions {
  bool corrector = true;
  CorrectorFreeze freeze = CorrectorFreeze::interpolated;
  SdirkTableau tableau = SdirkTableau::l_stable();
};

/// One step over the mesh motion: predictor with coefficients frozen at the
/// old state, cutoff, corrector from the old state with coefficients frozen at
/// the predicted state, cutoff.
StateFields predictor_corrector_step(const StateFields& state, const MeshMotion& motion,
                                     const ProblemSetup& setup, CutoffPolicy& policy, long step,
                                     const PredictorCorrectorOptions& options = {},
                                     StepStats* stats = nullptr);

}  // namespace mmrad
