#pragma once

#include "mmrad/sim_config.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace mmrad {

struct SnapshotEntry {
  double time = 0.0;
  std::filesystem::path csv;
  std::filesystem::path vtk;
};

struct PhaseTimings {
  double mesh_seconds = 0.0;
  double assembly_seconds = 0.0;
  double solve_seconds = 0.0;
  double total_seconds = 0.0;
};

struct RunArtifacts {
  std::string mode;
  Index M = 0, N = 0;
  Index coarse_M = 0, coarse_N = 0;
  double t_end = 0.0;
  long steps = 0;
  std::vector<SnapshotEntry> manifest;
  CutoffPolicy cutoff;
  PhaseTimings timings;
  StateFields final_state;
  MovingMesh final_mesh;
  double min_E = 0.0;
  double min_T = 0.0;
  double min_corner_jacobian = 0.0;
  double front_position = 0.0;
};

enum class LoopPhase { monitor, mesh_step, physics_step };

struct StepRecord {
  long step = 0;
  double t = 0.0;
  double dt = 0.0;
  const StateFields* state = nullptr;
  const MovingMesh* mesh = nullptr;
  const MovingMesh* coarse_mesh = nullptr;
  double min_corner_jacobian = 0.0;
  Index cutoff_nodes = 0;
};

/// Optional instrumentation. `on_phase` receives the phase with the time
/// stamps of the state and mesh it consumes.
struct RunHooks {
  std::function<void(LoopPhase phase, long step, double state_time, double mesh_time)> on_phase;
  std::function<void(const StepRecord&)> on_step;
  bool write_output = true;
};

/// Initialize, optionally pre-adapt, then loop: mesh step from (E_n, mesh_n),
/// predictor-corrector over the linear-in-time mesh motion, snapshots.
RunArtifacts run_simulation(const SimulationConfig& config, const RunHooks& hooks = {});

/// CSV (m, n, x, y, E, T) and optional VTK named state_t<time>.{csv,vtk}.
SnapshotEntry write_snapshot(const StateFields& state, const MovingMesh& mesh, double time,
                             const std::filesystem::path& directory, bool vtk = true);

void write_manifest(const std::filesystem::path& path, const std::vector<SnapshotEntry>& manifest);
std::vector<SnapshotEntry> read_manifest(const std::filesystem::path& path);

/// x where T first drops to `level` along y = y_line (from the hot x = 0 side);
/// NaN when the line never reaches the level.
double front_position(const MovingMesh& mesh, const Field& T, double level = 0.5, double y_line = 0.5);

void write_run_summary(const std::filesystem::path& path, const RunArtifacts& artifacts);

struct TimingRow {
  std::string mode;
  std::string fine_mesh;
  std::string coarse_mesh;
  double total_seconds = 0.0;
  double ratio = 1.0;
};

/// Rows mirror the paper's timing tables; the ratio is relative to the fixed
/// mesh run with the same fine mesh when present, else to the first row.
std::vector<TimingRow> timing_report(const std::vector<RunArtifacts>& runs);
std::vector<TimingRow> timing_report_from_summaries(const std::vector<std::filesystem::path>& summaries);
void write_timing_report(std::ostream& out, const std::vector<TimingRow>& rows);

}  // namespace mmrad
