#pragma once

#include "mmrad/mesh_geometry.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mmrad {

using NamedField = std::pair<std::string, const Field*>;

/// CSV with header "m,n,x,y[,field...]", one row per node, m fastest.
/// Values are written with 17 significant digits so reading them back is exact.
void write_csv(const std::filesystem::path& path, const MovingMesh& mesh,
               const std::vector<NamedField>& fields = {});

/// Legacy ASCII VTK, STRUCTURED_GRID, points m-fastest, fields as POINT_DATA scalars.
void write_vtk(const std::filesystem::path& path, const MovingMesh& mesh,
               const std::vector<NamedField>& fields = {}, const std::string& title = "mmrad");

struct CsvSnapshot {
  MovingMesh mesh;
  std::vector<std::string> field_names;
  std::vector<Field> fields;

  const Field& field(const std::string& name) const;
};

CsvSnapshot read_csv(const std::filesystem::path& path);

}  // namespace mmrad
