#pragma once

#include "mmrad/mesh_motion.hpp"
#include "mmrad/physics_2t.hpp"
#include "mmrad/time_integration.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mmrad {

enum class MeshMode { moving, fixed_uniform };

std::string to_string(MeshMode mode);
MeshMode parse_mesh_mode(const std::string& name);

struct SimulationConfig {
  Preset preset = Preset::example1;
  /// Physics mesh. With two_level_factor r > 1 the moving coarse mesh has
  /// (M - 1) / r + 1 by (N - 1) / r + 1 nodes.
  Index M = 41;
  Index N = 41;
  int two_level_factor = 1;
  MeshMode mesh_mode = MeshMode::moving;

  BoundarySpec boundary;
  MaterialMap material;
  PhysicsParams physics;
  bool jacobian_weighted_source = false;
  bool cutoff = true;
  CorrectorFreeze corrector_freeze = CorrectorFreeze::interpolated;

  MeshingParams meshing;
  StepSchedule schedule;
  std::vector<double> snapshot_times;

  std::filesystem::path output_dir = "out";
  bool write_vtk = true;

  Index coarse_M() const { return (M - 1) / two_level_factor + 1; }
  Index coarse_N() const { return (N - 1) / two_level_factor + 1; }
  /// "UM", "MM1" or "MM2".
  std::string mode_label() const;
};

/// Defaults for a paper example: material, boundary, initial state and
/// snapshot times.
SimulationConfig preset(const std::string& name);
SimulationConfig preset(Preset p);

/// Throws std::invalid_argument describing the first inconsistency.
void validate(const SimulationConfig& config);

/// "MxN" -> (M, N).
std::pair<Index, Index> parse_mesh_size(const std::string& text);

/// Flat "key = value" lines; '#' starts a comment. A `preset` key is applied
/// first wherever it appears; unknown keys are errors.
SimulationConfig parse_config(const std::string& text);
SimulationConfig load_config(const std::filesystem::path& path);

/// Apply a single key to a config (same keys as the file format).
void set_config_value(SimulationConfig& config, const std::string& key, const std::string& value);

std::vector<std::string> config_keys();

}  // namespace mmrad
