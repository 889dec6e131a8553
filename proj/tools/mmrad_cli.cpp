#include "mmrad/sim_driver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Moving-mesh 2T radiation diffusion simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a simulation");
  std::string config_path, preset_name, mesh, coarse, out_dir;
  int two_level = 0;
  bool fixed_mesh = false;
  double t_end = -1.0, dt = -1.0;
  run->add_option("--config", config_path, "Key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("--preset", preset_name, "example1, example2 or example3");
  run->add_option("--mesh", mesh, "Physics mesh MxN");
  run->add_option("--coarse", coarse, "Moving coarse mesh MxN (two-level)");
  run->add_option("--two-level", two_level, "Refinement factor r of the two-level method");
  run->add_flag("--fixed-mesh", fixed_mesh, "Fixed uniform mesh");
  run->add_option("--t-end", t_end, "Final time");
  run->add_option("--dt", dt, "Time step after the start-up ramp");
  run->add_option("--out", out_dir, "Output directory");

  app.add_subcommand("presets", "List presets");

  auto* report = app.add_subcommand("report", "Timing table from run summaries");
  std::vector<std::string> summaries;
  report->add_option("summaries", summaries, "summary.json files or run directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("presets")) {
      for (const auto& name : mmrad::preset_names()) {
        const auto c = mmrad::preset(name);
        std::cout << name << "  t_end=" << c.schedule.t_end << "  boundary=" << mmrad::to_string(c.boundary.kind)
                  << '\n';
      }
      return 0;
    }
    if (app.got_subcommand("report")) {
      std::vector<std::filesystem::path> paths;
      for (const auto& s : summaries) {
        std::filesystem::path p(s);
        if (std::filesystem::is_directory(p)) p /= "summary.json";
        paths.push_back(p);
      }
      mmrad::write_timing_report(std::cout, mmrad::timing_report_from_summaries(paths));
      return 0;
    }

    mmrad::SimulationConfig cfg =
        config_path.empty() ? mmrad::preset(mmrad::Preset::example1) : mmrad::load_config(config_path);
    if (!preset_name.empty()) mmrad::set_config_value(cfg, "preset", preset_name);
    if (!mesh.empty()) mmrad::set_config_value(cfg, "mesh", mesh);
    if (two_level > 0) cfg.two_level_factor = two_level;
    if (!coarse.empty()) mmrad::set_config_value(cfg, "coarse", coarse);
    if (fixed_mesh) cfg.mesh_mode = mmrad::MeshMode::fixed_uniform;
    if (t_end >= 0.0) cfg.schedule.t_end = t_end;
    if (dt > 0.0) cfg.schedule.dt = dt;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (cfg.mesh_mode == mmrad::MeshMode::fixed_uniform) cfg.two_level_factor = 1;

    const auto art = mmrad::run_simulation(cfg);
    std::cout << art.mode << " " << art.M << "x" << art.N << " steps=" << art.steps
              << " seconds=" << art.timings.total_seconds << " min_E=" << art.min_E
              << " min_T=" << art.min_T << " front=" << art.front_position
              << " out=" << cfg.output_dir.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mmrad: " << e.what() << '\n';
    return 1;
  }
}
