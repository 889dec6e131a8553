#include "mmrad/mesh_io.hpp"
#include "mmrad/sim_driver.hpp"

#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mmrad;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mmrad_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

SimulationConfig small_config(MeshMode mode, double t_end) {
  SimulationConfig c = preset(Preset::example1);
  c.M = c.N = 21;
  c.mesh_mode = mode;
  c.schedule.t_end = t_end;
  c.snapshot_times.clear();
  return c;
}

}  // namespace

TEST_CASE("presets") {
  const auto c1 = preset("example1");
  CHECK(c1.schedule.t_end == 3.0);
  CHECK(c1.snapshot_times == std::vector<double>{1.0, 1.5, 2.0, 2.4, 2.8, 3.0});
  CHECK(c1.boundary.kind == BoundaryKind::marshak_inflow_outflow);
  CHECK(c1.material.at(0.5, 0.5) == 5.0);
  const auto c2 = preset(Preset::example2);
  CHECK(c2.schedule.t_end == 5.0);
  CHECK(c2.material.at(0.5, 0.5) == 10.0);
  const auto c3 = preset(Preset::example3);
  CHECK(c3.boundary.kind == BoundaryKind::fully_insulated);
  CHECK(c3.snapshot_times.front() == 0.5);
  CHECK(c1.M == 41);
  CHECK(c1.mode_label() == "MM1");
  CHECK_THROWS_AS(preset("example9"), std::invalid_argument);
}

TEST_CASE("config parsing") {
  const auto c = parse_config(
      "# run\n"
      "t_end = 0.5   # shorter\n"
      "coarse = 41x41\n"
      "mesh = 81x81\n"
      "preset = example3\n"
      "snapshot_times = 0.1, 0.2,0.4\n"
      "material_region = 0.1 0.2 0.3 0.4 7\n"
      "tau = 0.02\n"
      "write_vtk = false\n");
  CHECK(c.preset == Preset::example3);
  CHECK(c.boundary.kind == BoundaryKind::fully_insulated);
  CHECK(c.schedule.t_end == 0.5);
  CHECK(c.M == 81);
  CHECK(c.two_level_factor == 2);
  CHECK(c.coarse_M() == 41);
  CHECK(c.mode_label() == "MM2");
  CHECK(c.snapshot_times == std::vector<double>{0.1, 0.2, 0.4});
  CHECK(c.material.regions.size() == 3);
  CHECK(c.material.at(0.15, 0.35) == 7.0);
  CHECK(c.meshing.tau == 0.02);
  CHECK_FALSE(c.write_vtk);

  CHECK_THROWS_AS(parse_config("bogus = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("t_end 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("dt = fast\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("mesh = 81x81\ncoarse = 30x30\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("mesh = 81x81\ntwo_level = 3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("snapshot_times = 0.2, 0.1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("theta = 0.7\n"), std::invalid_argument);
  CHECK(parse_config("mesh_mode = fixed\n").mode_label() == "UM");
  CHECK(parse_config("material_clear = true\n").material.regions.empty());
  CHECK(parse_mesh_size("61x41") == std::pair<Index, Index>{61, 41});
  CHECK_THROWS_AS(parse_mesh_size("61"), std::invalid_argument);
}

TEST_CASE("every documented key is accepted") {
  const std::map<std::string, std::string> samples = {
      {"preset", "example2"}, {"mesh", "41x41"}, {"coarse", "21x21"}, {"two_level", "1"},
      {"mesh_mode", "moving"}, {"boundary", "insulated"}, {"inflow_value", "2"},
      {"material_background", "1.5"}, {"material_region", "0 0.5 0 0.5 3"}, {"material_clear", "false"},
      {"kappa", "0.02"}, {"jacobian_weighted_source", "true"}, {"cutoff", "off"},
      {"corrector_freeze", "end_state"}, {"tau", "0.05"}, {"theta", "0.2"}, {"sweeps", "2"},
      {"substeps", "2"}, {"alpha_floor_ratio", "0.2"}, {"pre_adapt_cycles", "0"},
      {"eulerian_monitor", "no"}, {"dt", "2e-3"}, {"dt_start", "1e-4"}, {"ramp_steps", "5"},
      {"t_end", "0.3"}, {"snapshot_times", "0.1"}, {"output_dir", "elsewhere"}, {"write_vtk", "1"}};
  for (const auto& key : config_keys()) {
    REQUIRE(samples.count(key) == 1);
    SimulationConfig c = preset(Preset::example1);
    CHECK_NOTHROW(set_config_value(c, key, samples.at(key)));
  }
}

TEST_CASE("snapshot files") {
  const auto dir = scratch("snapshot");
  const auto mesh = uniform_mesh(make_grid(3, 3));
  const StateFields s{Field::Constant(3, 3, 2.0), Field::Constant(3, 3, 0.5), 0.0};
  const auto e = write_snapshot(s, mesh, 1.5, dir, true);
  CHECK(e.csv.filename() == "state_t1.5000.csv");
  CHECK(std::filesystem::exists(e.vtk));
  std::ifstream in(e.csv);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 9);
  const auto snap = read_csv(e.csv);
  CHECK((snap.field("E") - 2.0).abs().maxCoeff() == 0.0);
  CHECK((snap.field("T") - 0.5).abs().maxCoeff() == 0.0);

  write_manifest(dir / "manifest.csv", {e, {2.0, dir / "b.csv", {}}});
  const auto m = read_manifest(dir / "manifest.csv");
  REQUIRE(m.size() == 2);
  CHECK(m[0].time == 1.5);
  CHECK(m[0].csv == e.csv);
  CHECK(m[1].vtk.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("front position") {
  const auto mesh = uniform_mesh(make_grid(11, 11));
  CHECK(front_position(mesh, 1.0 - mesh.x) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(front_position(mesh, 1.2 - mesh.x, 0.5, 0.3) == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(std::isnan(front_position(mesh, Field::Constant(11, 11, 0.9))));
  CHECK(std::isnan(front_position(mesh, Field::Constant(11, 11, 0.1))));
}

TEST_CASE("zero end time writes only the initial snapshot") {
  auto c = small_config(MeshMode::moving, 0.0);
  c.output_dir = scratch("t0");
  c.snapshot_times = {0.0, 0.5};
  const auto art = run_simulation(c);
  CHECK(art.steps == 0);
  REQUIRE(art.manifest.size() == 1);
  CHECK(art.manifest[0].time == 0.0);
  CHECK(std::filesystem::exists(c.output_dir / "manifest.csv"));
  CHECK(std::filesystem::exists(c.output_dir / "cutoff_events.csv"));
  std::ifstream in(c.output_dir / "summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("steps") == 0);
  CHECK(j.at("mode") == "MM1");
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("fixed-mesh smoke run") {
  auto c = preset(Preset::example1);
  c.mesh_mode = MeshMode::fixed_uniform;
  c.schedule.t_end = 0.1;
  c.snapshot_times = {0.05, 0.1};
  c.output_dir = scratch("fixed");
  std::vector<LoopPhase> phases;
  double min_E = 1e300;
  RunHooks hooks;
  hooks.on_phase = [&](LoopPhase p, long, double, double) { phases.push_back(p); };
  hooks.on_step = [&](const StepRecord& r) {
    min_E = std::min(min_E, r.state->E.minCoeff());
    CHECK(r.min_corner_jacobian == doctest::Approx(1.0));
  };
  const auto art = run_simulation(c, hooks);
  CHECK(min_E >= 0.01875);
  CHECK(art.min_E >= 0.01875);
  CHECK(art.min_T >= 0.01875);
  CHECK(art.mode == "UM");
  CHECK(art.t_end == 0.1);
  CHECK(art.final_state.t == doctest::Approx(0.1));
  for (auto p : phases) CHECK(p == LoopPhase::physics_step);
  CHECK(static_cast<long>(phases.size()) == art.steps);
  REQUIRE(art.manifest.size() == 3);
  CHECK(art.manifest[1].time == 0.05);
  const auto snap = read_csv(art.manifest[2].csv);
  CHECK((snap.field("E") - art.final_state.E).abs().maxCoeff() < 1e-12);
  CHECK(std::isfinite(art.front_position));
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("moving-mesh loop order and snapshot interpolation") {
  auto c = small_config(MeshMode::moving, 0.03);
  c.snapshot_times = {0.0155};
  c.output_dir = scratch("moving");
  long last_step = 0;
  std::vector<LoopPhase> order;
  RunHooks hooks;
  hooks.on_phase = [&](LoopPhase p, long step, double state_time, double mesh_time) {
    CHECK(state_time == mesh_time);
    if (step != last_step) {
      if (!order.empty()) {
        REQUIRE(order.size() == 3);
        CHECK(order[0] == LoopPhase::monitor);
        CHECK(order[1] == LoopPhase::mesh_step);
        CHECK(order[2] == LoopPhase::physics_step);
      }
      order.clear();
      last_step = step;
    }
    order.push_back(p);
  };
  double prev_t = 0.0;
  hooks.on_step = [&](const StepRecord& r) {
    CHECK(r.t > prev_t);
    CHECK(r.mesh->t == r.t);
    CHECK(r.min_corner_jacobian > 0.0);
    CHECK(r.state->E.minCoeff() >= cutoff_threshold(21, 21));
    prev_t = r.t;
  };
  const auto art = run_simulation(c, hooks);
  CHECK(prev_t == 0.03);
  REQUIRE(art.manifest.size() == 2);
  CHECK(art.manifest[1].time == 0.0155);
  const auto snap = read_csv(art.manifest[1].csv);
  CHECK(min_corner_jacobian(snap.mesh) > 0.0);
  CHECK(snap.field("E").minCoeff() >= cutoff_threshold(21, 21));
  CHECK(art.timings.mesh_seconds > 0.0);
  std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("runs are deterministic") {
  auto c = small_config(MeshMode::moving, 0.01);
  RunHooks quiet;
  quiet.write_output = false;
  const auto a = run_simulation(c, quiet);
  const auto b = run_simulation(c, quiet);
  CHECK((a.final_state.E - b.final_state.E).abs().maxCoeff() == 0.0);
  CHECK((a.final_mesh.x - b.final_mesh.x).abs().maxCoeff() == 0.0);
  CHECK(a.manifest.empty());
}

TEST_CASE("timing report") {
  RunArtifacts um, mm1, mm2;
  um.mode = "UM";
  um.M = um.N = um.coarse_M = um.coarse_N = 81;
  um.timings.total_seconds = 10.0;
  mm1 = um;
  mm1.mode = "MM1";
  mm1.timings.total_seconds = 20.0;
  mm2 = um;
  mm2.mode = "MM2";
  mm2.coarse_M = mm2.coarse_N = 41;
  mm2.timings.total_seconds = 5.0;
  const auto rows = timing_report({mm1, um, mm2});
  CHECK(rows[0].ratio == doctest::Approx(2.0));
  CHECK(rows[1].ratio == doctest::Approx(1.0));
  CHECK(rows[2].ratio == doctest::Approx(0.5));
  CHECK(rows[2].coarse_mesh == "41x41");

  const auto dir = scratch("timing");
  std::filesystem::create_directories(dir);
  write_run_summary(dir / "a.json", um);
  write_run_summary(dir / "b.json", mm2);
  const auto again = timing_report_from_summaries({dir / "a.json", dir / "b.json"});
  CHECK(again[1].ratio == doctest::Approx(0.5));
  std::ostringstream os;
  write_timing_report(os, again);
  CHECK(os.str().rfind("mode,fine_mesh,coarse_mesh,total_seconds,ratio\n", 0) == 0);
  std::filesystem::remove_all(dir);
}
