#include "mmrad/sim_driver.hpp"

#include "mmrad/mesh_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace mmrad {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string time_tag(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", t);
  return buf;
}

std::string mesh_label(Index M, Index N) { return std::to_string(M) + "x" + std::to_string(N); }

struct MeshPair {
  MovingMesh coarse;
  MovingMesh fine;
};

}  // namespace

SnapshotEntry write_snapshot(const StateFields& state, const MovingMesh& mesh, double time,
                             const std::filesystem::path& dir, bool vtk) {
  std::filesystem::create_directories(dir);
  const std::string stem = "state_t" + time_tag(time);
  SnapshotEntry e{time, dir / (stem + ".csv"), {}};
  const std::vector<NamedField> fields = {{"E", &state.E}, {"T", &state.T}};
  write_csv(e.csv, mesh, fields);
  if (vtk) {
    e.vtk = dir / (stem + ".vtk");
    write_vtk(e.vtk, mesh, fields, "mmrad t=" + time_tag(time));
  }
  return e;
}

void write_manifest(const std::filesystem::path& path, const std::vector<SnapshotEntry>& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "time,csv,vtk\n" << std::setprecision(17);
  for (const auto& e : manifest) {
    out << e.time << ',' << e.csv.filename().string() << ',' << e.vtk.filename().string() << '\n';
  }
}

std::vector<SnapshotEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<SnapshotEntry> out;
  const auto dir = path.parent_path();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string t, csv, vtk;
    std::getline(is, t, ',');
    std::getline(is, csv, ',');
    std::getline(is, vtk, ',');
    out.push_back({std::stod(t), dir / csv, vtk.empty() ? std::filesystem::path{} : dir / vtk});
  }
  return out;
}

double front_position(const MovingMesh& mesh, const Field& T, double level, double y_line) {
  constexpr int samples = 4000;
  double x_prev = 0.0;
  double v_prev = sample_field(mesh, T, 0.0, y_line);
  if (!(v_prev > level)) return std::numeric_limits<double>::quiet_NaN();
  for (int k = 1; k <= samples; ++k) {
    const double x = static_cast<double>(k) / samples;
    const double v = sample_field(mesh, T, x, y_line);
    if (std::isnan(v)) continue;
    if (v <= level) return x_prev + (v_prev - level) / (v_prev - v) * (x - x_prev);
    x_prev = x;
    v_prev = v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

RunArtifacts run_simulation(const SimulationConfig& config, const RunHooks& hooks) {
  validate(config);
  const auto t_start = Clock::now();
  const int r = config.two_level_factor;
  const bool moving = config.mesh_mode == MeshMode::moving;

  RunArtifacts art;
  art.mode = config.mode_label();
  art.M = config.M;
  art.N = config.N;
  art.coarse_M = moving ? config.coarse_M() : config.M;
  art.coarse_N = moving ? config.coarse_N() : config.N;
  art.t_end = config.schedule.t_end;

  ProblemSetup setup;
  setup.material = config.material;
  setup.physics = config.physics;
  setup.boundary = config.boundary;
  setup.jacobian_weighted_source = config.jacobian_weighted_source;

  PredictorCorrectorOptions pc;
  pc.freeze = config.corrector_freeze;

  MeshPair meshes;
  meshes.coarse = uniform_mesh(make_grid(art.coarse_M, art.coarse_N));
  meshes.fine = (moving && r > 1) ? refine_uniform(meshes.coarse, r) : meshes.coarse;

  art.cutoff = make_cutoff_policy(meshes.fine.grid);
  art.cutoff.enabled = config.cutoff;
  StateFields state = apply_cutoff(initial_state(config.preset, meshes.fine), art.cutoff, 0);

  auto mesh_cycle = [&](const MeshPair& cur, const Field& E, double dt) {
    const auto t0 = Clock::now();
    TwoLevelMeshes next = two_level_cycle(cur.coarse, cur.fine, E, r, config.meshing, dt);
    art.timings.mesh_seconds += seconds_since(t0);
    return MeshPair{std::move(next.coarse), std::move(next.fine)};
  };

  if (moving) {
    for (int c = 0; c < config.meshing.pre_adapt_cycles; ++c) {
      meshes = mesh_cycle(meshes, state.E, config.meshing.tau);
      art.cutoff.log.clear();
      state = apply_cutoff(initial_state(config.preset, meshes.fine), art.cutoff, 0);
    }
  }
  meshes.coarse.t = meshes.fine.t = 0.0;

  art.min_E = state.E.minCoeff();
  art.min_T = state.T.minCoeff();
  art.min_corner_jacobian = min_corner_jacobian(meshes.fine);

  if (hooks.write_output) art.manifest.push_back(write_snapshot(state, meshes.fine, 0.0, config.output_dir, config.write_vtk));
  std::size_t next_snap = 0;
  while (next_snap < config.snapshot_times.size() && config.snapshot_times[next_snap] <= 0.0) ++next_snap;

  double t = 0.0;
  long step = 0;
  while (t < config.schedule.t_end) {
    const double dt = config.schedule.step_size(step, t);
    if (!(dt > 0.0)) break;
    const double t_next = (dt == config.schedule.t_end - t) ? config.schedule.t_end : t + dt;
    ++step;
    try {
      MeshPair next = meshes;
      if (moving) {
        if (hooks.on_phase) hooks.on_phase(LoopPhase::monitor, step, state.t, meshes.fine.t);
        if (hooks.on_phase) hooks.on_phase(LoopPhase::mesh_step, step, state.t, meshes.coarse.t);
        next = mesh_cycle(meshes, state.E, t_next - t);
      }
      next.coarse.t = next.fine.t = t_next;
      const MeshMotion motion = make_motion(meshes.fine, next.fine);

      if (hooks.on_phase) hooks.on_phase(LoopPhase::physics_step, step, state.t, meshes.fine.t);
      StepStats stats;
      StateFields new_state = predictor_corrector_step(state, motion, setup, art.cutoff, step, pc, &stats);
      new_state.t = t_next;
      art.timings.assembly_seconds += stats.assembly_seconds;
      art.timings.solve_seconds += stats.solve_seconds;

      while (hooks.write_output && next_snap < config.snapshot_times.size() &&
             config.snapshot_times[next_snap] <= t_next + 1e-12) {
        const double ts = config.snapshot_times[next_snap++];
        const double s = (ts - t) / (t_next - t);
        StateFields snap{(1.0 - s) * state.E + s * new_state.E, (1.0 - s) * state.T + s * new_state.T, ts};
        MovingMesh m = mesh_at_time(motion, std::min(ts, t_next));
        art.manifest.push_back(write_snapshot(snap, m, ts, config.output_dir, config.write_vtk));
      }

      state = std::move(new_state);
      meshes = std::move(next);
      t = t_next;

      const double jmin = min_corner_jacobian(meshes.fine);
      art.min_E = std::min(art.min_E, state.E.minCoeff());
      art.min_T = std::min(art.min_T, state.T.minCoeff());
      art.min_corner_jacobian = std::min(art.min_corner_jacobian, jmin);
      if (hooks.on_step) {
        StepRecord rec{step, t, dt, &state, &meshes.fine, &meshes.coarse, jmin,
                       art.cutoff.events_for_step(step)};
        hooks.on_step(rec);
      }
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "step " << step << " (t = " << t << ", dt = " << dt << "): " << e.what();
      throw std::runtime_error(os.str());
    }
  }

  art.steps = step;
  art.final_state = state;
  art.final_mesh = meshes.fine;
  art.front_position = front_position(meshes.fine, state.T);
  art.timings.total_seconds = seconds_since(t_start);

  if (hooks.write_output) {
    write_manifest(config.output_dir / "manifest.csv", art.manifest);
    write_cutoff_log((config.output_dir / "cutoff_events.csv").string(), art.cutoff);
    write_run_summary(config.output_dir / "summary.json", art);
  }
  return art;
}

void write_run_summary(const std::filesystem::path& path, const RunArtifacts& a) {
  nlohmann::json j;
  j["mode"] = a.mode;
  j["fine_mesh"] = mesh_label(a.M, a.N);
  j["coarse_mesh"] = mesh_label(a.coarse_M, a.coarse_N);
  j["t_end"] = a.t_end;
  j["steps"] = a.steps;
  j["timings"] = {{"mesh_seconds", a.timings.mesh_seconds},
                  {"assembly_seconds", a.timings.assembly_seconds},
                  {"solve_seconds", a.timings.solve_seconds},
                  {"total_seconds", a.timings.total_seconds}};
  j["min_E"] = a.min_E;
  j["min_T"] = a.min_T;
  j["min_corner_jacobian"] = a.min_corner_jacobian;
  j["cutoff_threshold"] = a.cutoff.threshold;
  j["cutoff_events"] = a.cutoff.log.size();
  if (std::isfinite(a.front_position)) {
    j["front_position"] = a.front_position;
  } else {
    j["front_position"] = nullptr;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<TimingRow> timing_report(const std::vector<RunArtifacts>& runs) {
  std::vector<TimingRow> rows;
  for (const auto& a : runs) {
    rows.push_back({a.mode, mesh_label(a.M, a.N), mesh_label(a.coarse_M, a.coarse_N),
                    a.timings.total_seconds, 1.0});
  }
  for (auto& row : rows) {
    double base = rows.empty() ? 1.0 : rows.front().total_seconds;
    for (const auto& other : rows) {
      if (other.mode == "UM" && other.fine_mesh == row.fine_mesh) base = other.total_seconds;
    }
    row.ratio = base > 0.0 ? row.total_seconds / base : 1.0;
  }
  return rows;
}

std::vector<TimingRow> timing_report_from_summaries(const std::vector<std::filesystem::path>& paths) {
  std::vector<RunArtifacts> runs;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    RunArtifacts a;
    a.mode = j.at("mode").get<std::string>();
    std::tie(a.M, a.N) = parse_mesh_size(j.at("fine_mesh").get<std::string>());
    std::tie(a.coarse_M, a.coarse_N) = parse_mesh_size(j.at("coarse_mesh").get<std::string>());
    a.timings.total_seconds = j.at("timings").at("total_seconds").get<double>();
    runs.push_back(std::move(a));
  }
  return timing_report(runs);
}

void write_timing_report(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "mode,fine_mesh,coarse_mesh,total_seconds,ratio\n";
  for (const auto& r : rows) {
    out << r.mode << ',' << r.fine_mesh << ',' << r.coarse_mesh << ',' << std::setprecision(6)
        << r.total_seconds << ',' << r.ratio << '\n';
  }
}

}  // namespace mmrad
