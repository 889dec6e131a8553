#include "mmrad/mesh_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace mmrad {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void check_field_shapes(const MovingMesh& mesh, const std::vector<NamedField>& fields) {
  for (const auto& [name, f] : fields) {
    if (f->rows() != mesh.grid.M || f->cols() != mesh.grid.N) {
      throw std::invalid_argument("field '" + name + "' does not match mesh size");
    }
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) throw std::runtime_error("bad number in CSV: '" + s + "'");
  return v;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const MovingMesh& mesh,
               const std::vector<NamedField>& fields) {
  check_field_shapes(mesh, fields);
  auto out = open_for_write(path);
  out << "m,n,x,y";
  for (const auto& [name, f] : fields) out << ',' << name;
  out << '\n';
  for (Index n = 0; n < mesh.grid.N; ++n) {
    for (Index m = 0; m < mesh.grid.M; ++m) {
      out << m << ',' << n << ',' << mesh.x(m, n) << ',' << mesh.y(m, n);
      for (const auto& [name, f] : fields) out << ',' << (*f)(m, n);
      out << '\n';
    }
  }
}

void write_vtk(const std::filesystem::path& path, const MovingMesh& mesh,
               const std::vector<NamedField>& fields, const std::string& title) {
  check_field_shapes(mesh, fields);
  auto out = open_for_write(path);
  const auto& g = mesh.grid;
  out << "# vtk DataFile Version 3.0\n" << title << " t=" << mesh.t << "\nASCII\n";
  out << "DATASET STRUCTURED_GRID\n";
  out << "DIMENSIONS " << g.M << ' ' << g.N << " 1\n";
  out << "POINTS " << g.size() << " double\n";
  for (Index n = 0; n < g.N; ++n) {
    for (Index m = 0; m < g.M; ++m) out << mesh.x(m, n) << ' ' << mesh.y(m, n) << " 0\n";
  }
  if (!fields.empty()) {
    out << "POINT_DATA " << g.size() << '\n';
    for (const auto& [name, f] : fields) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (Index n = 0; n < g.N; ++n) {
        for (Index m = 0; m < g.M; ++m) out << (*f)(m, n) << '\n';
      }
    }
  }
}

const Field& CsvSnapshot::field(const std::string& name) const {
  for (std::size_t i = 0; i < field_names.size(); ++i) {
    if (field_names[i] == name) return fields[i];
  }
  throw std::out_of_range("no field '" + name + "' in snapshot");
}

CsvSnapshot read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = split(line, ',');
  if (header.size() < 4 || header[0] != "m" || header[1] != "n" || header[2] != "x" ||
      header[3] != "y") {
    throw std::runtime_error("unexpected CSV header in " + path.string());
  }
  std::vector<std::vector<double>> rows;
  Index max_m = -1, max_n = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != header.size()) throw std::runtime_error("ragged CSV row in " + path.string());
    std::vector<double> v;
    v.reserve(cols.size());
    for (const auto& c : cols) v.push_back(parse_double(c));
    max_m = std::max<Index>(max_m, static_cast<Index>(v[0]));
    max_n = std::max<Index>(max_n, static_cast<Index>(v[1]));
    rows.push_back(std::move(v));
  }
  CsvSnapshot snap;
  snap.mesh.grid = ReferenceGrid{max_m + 1, max_n + 1};
  const Index M = max_m + 1, N = max_n + 1;
  if (static_cast<Index>(rows.size()) != M * N) throw std::runtime_error("incomplete CSV grid");
  snap.mesh.x = Field(M, N);
  snap.mesh.y = Field(M, N);
  snap.field_names.assign(header.begin() + 4, header.end());
  snap.fields.assign(snap.field_names.size(), Field(M, N));
  for (const auto& v : rows) {
    const auto m = static_cast<Index>(v[0]);
    const auto n = static_cast<Index>(v[1]);
    snap.mesh.x(m, n) = v[2];
    snap.mesh.y(m, n) = v[3];
    for (std::size_t k = 0; k < snap.fields.size(); ++k) snap.fields[k](m, n) = v[4 + k];
  }
  return snap;
}

}  // namespace mmrad
