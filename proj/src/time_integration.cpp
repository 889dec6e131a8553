#include "mmrad/time_integration.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace mmrad {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

SparseMatrix stage_matrix(const SparseMatrix& L, double scale) {
  SparseMatrix I(L.rows(), L.cols());
  I.setIdentity();
  SparseMatrix A = I - scale * L;
  A.makeCompressed();
  return A;
}

bool is_static(const MeshMotion& motion) {
  return (motion.from.x.array() == motion.to.x.array()).all() &&
         (motion.from.y.array() == motion.to.y.array()).all();
}

}  // namespace

double SdirkTableau::stability_function(double z) const {
  // Stage equations for u' = lambda u with z = lambda dt.
  const double k1 = 1.0 / (1.0 - z * gamma);
  const double k2 = (1.0 + z * a21() * k1) / (1.0 - z * gamma);
  return 1.0 + z * (b1() * k1 + b2() * k2);
}

Vector sdirk2_step(const OperatorFamily& family, const Vector& u_n, double t_n, double dt,
                   const SdirkTableau& tab, StepStats* stats) {
  if (!(dt > 0.0)) throw std::invalid_argument("sdirk2_step: dt must be positive");
  StepStats local;
  StepStats& st = stats ? *stats : local;

  auto t0 = Clock::now();
  LinearSystem s1 = family.at(t_n + tab.c1() * dt);
  st.assembly_seconds += seconds_since(t0);
  if (s1.L.rows() != u_n.size() || s1.g.size() != u_n.size()) {
    throw std::invalid_argument("sdirk2_step: operator dimension mismatch");
  }

  t0 = Clock::now();
  const Factorization f1(stage_matrix(s1.L, tab.gamma * dt));
  ++st.factorizations;
  const Vector k1 = f1.solve(s1.L * u_n + s1.g);
  st.solve_seconds += seconds_since(t0);

  const Vector u_mid = u_n + dt * tab.a21() * k1;
  Vector k2;
  if (family.time_invariant) {
    t0 = Clock::now();
    k2 = f1.solve(s1.L * u_mid + s1.g);
    st.solve_seconds += seconds_since(t0);
  } else {
    t0 = Clock::now();
    LinearSystem s2 = family.at(t_n + tab.c2() * dt);
    st.assembly_seconds += seconds_since(t0);
    t0 = Clock::now();
    const Factorization f2(stage_matrix(s2.L, tab.gamma * dt));
    ++st.factorizations;
    k2 = f2.solve(s2.L * u_mid + s2.g);
    st.solve_seconds += seconds_since(t0);
  }
  return u_n + dt * (tab.b1() * k1 + tab.b2() * k2);
}

Index CutoffPolicy::events_for_step(long step) const {
  Index total = 0;
  for (const auto& e : log) {
    if (e.step == step) total += e.count;
  }
  return total;
}

double cutoff_threshold(Index M, Index N) {
  return 30.0 / (static_cast<double>(M - 1) * static_cast<double>(N - 1));
}

CutoffPolicy make_cutoff_policy(const ReferenceGrid& grid) {
  return {cutoff_threshold(grid.M, grid.N), true, {}};
}

StateFields apply_cutoff(const StateFields& state, CutoffPolicy& policy, long step) {
  StateFields out = state;
  if (!policy.enabled) return out;
  const double c = policy.threshold;
  auto clip = [&](Field& f, FieldBlock block) {
    Index count = 0;
    for (Index k = 0; k < f.size(); ++k) {
      if (!(f(k) >= c)) {
        f(k) = c;
        ++count;
      }
    }
    if (count > 0) policy.log.push_back({step, state.t, block, count});
  };
  clip(out.E, FieldBlock::E);
  clip(out.T, FieldBlock::T);
  return out;
}

void write_cutoff_log(const std::string& path, const CutoffPolicy& policy) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "step,time,field,nodes_clipped\n" << std::setprecision(10);
  for (const auto& e : policy.log) {
    out << e.step << ',' << e.time << ',' << (e.field == FieldBlock::E ? "E" : "T") << ','
        << e.count << '\n';
  }
}

double StepSchedule::step_size(long step, double t) const {
  if (!(dt > 0.0) || !(dt_start > 0.0)) throw std::invalid_argument("StepSchedule: dt must be positive");
  double h = dt;
  if (step < ramp_steps && dt_start < dt) {
    h = dt_start * std::pow(dt / dt_start, static_cast<double>(step) / ramp_steps);
  }
  const double remaining = t_end - t;
  // Avoid a sliver step at the end.
  if (h >= remaining - 1e-9 * h) return remaining;
  return h;
}

std::vector<double> StepSchedule::sizes(double t0) const {
  std::vector<double> out;
  double t = t0;
  for (long k = 0; t < t_end; ++k) {
    const double h = step_size(k, t);
    if (!(h > 0.0)) break;
    out.push_back(h);
    t = (h == t_end - t) ? t_end : t + h;
  }
  return out;
}

StateFields predictor_corrector_step(const StateFields& state, const MeshMotion& motion,
                                     const ProblemSetup& setup, CutoffPolicy& policy, long step,
                                     const PredictorCorrectorOptions& options, StepStats* stats) {
  const double t_n = motion.t_begin();
  const double dt = motion.dt;
  const bool fixed = is_static(motion);
  const MeshVelocity velocity = motion_velocity(motion);

  auto mesh_at = [&](double t) { return fixed ? motion.from : mesh_at_time(motion, t); };

  const Vector u_n = stack_fields(state.E, state.T);

  OperatorFamily predictor{
      [&](double t) {
        auto op = build_coupled_operator(state.E, state.T, mesh_at(t), velocity, setup, t);
        return LinearSystem{std::move(op.L), std::move(op.g)};
      },
      fixed && !setup.forcing.time_dependent_data()};

  StateFields pred{state.E, state.T, t_n + dt};
  unstack_fields(sdirk2_step(predictor, u_n, t_n, dt, options.tableau, stats), pred.E, pred.T);
  pred = apply_cutoff(pred, policy, step);
  if (!options.corrector) return pred;

  OperatorFamily corrector{
      [&](double t) {
        Field Es = pred.E, Ts = pred.T;
        if (options.freeze == CorrectorFreeze::interpolated) {
          const double s = (t - t_n) / dt;
          Es = (1.0 - s) * state.E + s * pred.E;
          Ts = (1.0 - s) * state.T + s * pred.T;
        }
        auto op = build_coupled_operator(Es, Ts, mesh_at(t), velocity, setup, t);
        return LinearSystem{std::move(op.L), std::move(op.g)};
      },
      false};
  if (options.freeze == CorrectorFreeze::end_state) corrector.time_invariant = predictor.time_invariant;

  StateFields corr{state.E, state.T, t_n + dt};
  unstack_fields(sdirk2_step(corrector, u_n, t_n, dt, options.tableau, stats), corr.E, corr.T);
  return apply_cutoff(corr, policy, step);
}

}  // namespace mmrad
