#include "mmrad/sim_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mmrad {

std::string to_string(MeshMode mode) { return mode == MeshMode::moving ? "moving" : "fixed"; }

MeshMode parse_mesh_mode(const std::string& name) {
  if (name == "moving") return MeshMode::moving;
  if (name == "fixed" || name == "fixed-uniform") return MeshMode::fixed_uniform;
  throw std::invalid_argument("unknown mesh mode '" + name + "'");
}

std::string SimulationConfig::mode_label() const {
  if (mesh_mode == MeshMode::fixed_uniform) return "UM";
  return two_level_factor > 1 ? "MM2" : "MM1";
}

SimulationConfig preset(Preset p) {
  SimulationConfig c;
  c.preset = p;
  c.material = preset_material(p);
  c.boundary = preset_boundary(p);
  switch (p) {
    case Preset::example1:
      c.schedule.t_end = 3.0;
      c.snapshot_times = {1.0, 1.5, 2.0, 2.4, 2.8, 3.0};
      break;
    case Preset::example2:
      c.schedule.t_end = 5.0;
      c.snapshot_times = {1.0, 1.5, 2.0, 2.4, 2.8, 3.0, 3.5, 4.0, 5.0};
      break;
    case Preset::example3:
      c.schedule.t_end = 3.0;
      c.snapshot_times = {0.5, 0.7, 0.8, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0};
      break;
  }
  return c;
}

SimulationConfig preset(const std::string& name) { return preset(parse_preset(name)); }

void validate(const SimulationConfig& c) {
  if (c.M < 3 || c.N < 3) throw std::invalid_argument("config: mesh needs at least 3 x 3 nodes");
  if (c.two_level_factor < 1) throw std::invalid_argument("config: two-level factor must be >= 1");
  if ((c.M - 1) % c.two_level_factor != 0 || (c.N - 1) % c.two_level_factor != 0) {
    throw std::invalid_argument("config: fine mesh must equal r (coarse - 1) + 1");
  }
  if (c.two_level_factor > 1 && (c.coarse_M() < 3 || c.coarse_N() < 3)) {
    throw std::invalid_argument("config: coarse mesh needs at least 3 x 3 nodes");
  }
  if (!(c.schedule.t_end >= 0.0)) throw std::invalid_argument("config: t_end must be non-negative");
  if (!(c.schedule.dt > 0.0) || !(c.schedule.dt_start > 0.0)) {
    throw std::invalid_argument("config: dt and dt_start must be positive");
  }
  if (c.schedule.ramp_steps < 0) throw std::invalid_argument("config: ramp_steps must be non-negative");
  if (!(c.physics.kappa > 0.0)) throw std::invalid_argument("config: kappa must be positive");
  if (!(c.material.background > 0.0)) throw std::invalid_argument("config: background z must be positive");
  for (const auto& r : c.material.regions) {
    if (!(r.z > 0.0) || !(r.x0 < r.x1) || !(r.y0 < r.y1)) {
      throw std::invalid_argument("config: material regions need x0 < x1, y0 < y1, z > 0");
    }
  }
  validate(c.meshing);
  for (std::size_t i = 1; i < c.snapshot_times.size(); ++i) {
    if (!(c.snapshot_times[i] > c.snapshot_times[i - 1])) {
      throw std::invalid_argument("config: snapshot times must be strictly increasing");
    }
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long to_int(const std::string& key, const std::string& v) {
  long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw std::invalid_argument("config: '" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

}  // namespace

std::pair<Index, Index> parse_mesh_size(const std::string& text) {
  const auto pos = text.find_first_of("xX");
  if (pos == std::string::npos) throw std::invalid_argument("mesh size must look like MxN, got '" + text + "'");
  const long M = to_int("mesh", trim(text.substr(0, pos)));
  const long N = to_int("mesh", trim(text.substr(pos + 1)));
  return {M, N};
}

std::vector<std::string> config_keys() {
  return {"preset",         "mesh",          "coarse",          "two_level",
          "mesh_mode",      "boundary",      "inflow_value",    "material_background",
          "material_region", "material_clear", "kappa",        "jacobian_weighted_source", "cutoff",
          "corrector_freeze", "tau",         "theta",           "sweeps",
          "substeps",       "alpha_floor_ratio", "pre_adapt_cycles", "eulerian_monitor",
          "dt",             "dt_start",      "ramp_steps",      "t_end",
          "snapshot_times", "output_dir",    "write_vtk"};
}

void set_config_value(SimulationConfig& c, const std::string& key, const std::string& v) {
  if (key == "preset") {
    SimulationConfig p = preset(v);
    p.M = c.M;
    p.N = c.N;
    p.two_level_factor = c.two_level_factor;
    p.mesh_mode = c.mesh_mode;
    p.output_dir = c.output_dir;
    c = std::move(p);
  } else if (key == "mesh") {
    std::tie(c.M, c.N) = parse_mesh_size(v);
  } else if (key == "coarse") {
    const auto [cm, cn] = parse_mesh_size(v);
    if (cm < 3 || cn < 3 || (c.M - 1) % (cm - 1) != 0 || (c.N - 1) % (cn - 1) != 0 ||
        (c.M - 1) / (cm - 1) != (c.N - 1) / (cn - 1)) {
      throw std::invalid_argument("config: coarse mesh " + v + " does not refine uniformly to the fine mesh");
    }
    c.two_level_factor = static_cast<int>((c.M - 1) / (cm - 1));
  } else if (key == "two_level") {
    c.two_level_factor = static_cast<int>(to_int(key, v));
  } else if (key == "mesh_mode") {
    c.mesh_mode = parse_mesh_mode(v);
  } else if (key == "boundary") {
    c.boundary.kind = parse_boundary_kind(v);
  } else if (key == "inflow_value") {
    c.boundary.inflow_value = to_double(key, v);
  } else if (key == "material_background") {
    c.material.background = to_double(key, v);
  } else if (key == "material_region") {
    std::istringstream is(v);
    std::vector<double> vals;
    std::string tok;
    while (is >> tok) vals.push_back(to_double(key, tok));
    if (vals.size() != 5) throw std::invalid_argument("config: material_region expects 'x0 x1 y0 y1 z'");
    c.material.regions.push_back({vals[0], vals[1], vals[2], vals[3], vals[4]});
  } else if (key == "material_clear") {
    if (to_bool(key, v)) c.material.regions.clear();
  } else if (key == "kappa") {
    c.physics.kappa = to_double(key, v);
  } else if (key == "jacobian_weighted_source") {
    c.jacobian_weighted_source = to_bool(key, v);
  } else if (key == "cutoff") {
    c.cutoff = to_bool(key, v);
  } else if (key == "corrector_freeze") {
    if (v == "interpolated") {
      c.corrector_freeze = CorrectorFreeze::interpolated;
    } else if (v == "end_state") {
      c.corrector_freeze = CorrectorFreeze::end_state;
    } else {
      throw std::invalid_argument("config: corrector_freeze must be interpolated or end_state");
    }
  } else if (key == "tau") {
    c.meshing.tau = to_double(key, v);
  } else if (key == "theta") {
    c.meshing.theta = to_double(key, v);
  } else if (key == "sweeps") {
    c.meshing.sweeps = static_cast<int>(to_int(key, v));
  } else if (key == "substeps") {
    c.meshing.substeps = static_cast<int>(to_int(key, v));
  } else if (key == "alpha_floor_ratio") {
    c.meshing.alpha_floor_ratio = to_double(key, v);
  } else if (key == "pre_adapt_cycles") {
    c.meshing.pre_adapt_cycles = static_cast<int>(to_int(key, v));
  } else if (key == "eulerian_monitor") {
    c.meshing.eulerian_monitor = to_bool(key, v);
  } else if (key == "dt") {
    c.schedule.dt = to_double(key, v);
  } else if (key == "dt_start") {
    c.schedule.dt_start = to_double(key, v);
  } else if (key == "ramp_steps") {
    c.schedule.ramp_steps = static_cast<int>(to_int(key, v));
  } else if (key == "t_end") {
    c.schedule.t_end = to_double(key, v);
  } else if (key == "snapshot_times") {
    c.snapshot_times = to_list(key, v);
  } else if (key == "output_dir") {
    c.output_dir = v;
  } else if (key == "write_vtk") {
    c.write_vtk = to_bool(key, v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

SimulationConfig parse_config(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  SimulationConfig c = preset(Preset::example1);
  // The preset supplies defaults, so it goes first; mesh keys go before
  // `coarse` so the factor can be derived.
  auto rank = [](const std::string& k) { return k == "preset" ? 0 : (k == "mesh" ? 1 : 2); };
  std::stable_sort(entries.begin(), entries.end(),
                   [&](const auto& a, const auto& b) { return rank(a.first) < rank(b.first); });
  for (const auto& [k, v] : entries) set_config_value(c, k, v);
  validate(c);
  return c;
}

SimulationConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace mmrad
