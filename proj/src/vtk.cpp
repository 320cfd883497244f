#include "twostep/vtk.hpp"

#include <fstream>
#include <stdexcept>

namespace twostep {

namespace {

template <class T>
void check_size(const std::string& name, const std::vector<T>& v, int cells) {
  if (static_cast<int>(v.size()) != cells)
    throw std::invalid_argument("vtk: cell array '" + name + "' has " +
                                std::to_string(v.size()) + " entries for " +
                                std::to_string(cells) + " cells");
}

}  // namespace

void write_vtk_unstructured(const Mesh& mesh, const VtkCellData& data,
                            const std::filesystem::path& path, const std::string& title) {
  const int nc = mesh.num_cells();
  for (const auto& [name, v] : data.vectors) check_size(name, v, nc);
  for (const auto& [name, v] : data.scalars) check_size(name, v, nc);
  for (const auto& [name, v] : data.int_scalars) check_size(name, v, nc);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("vtk: cannot open '" + path.string() + "' for writing");
  out.precision(17);

  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const auto& p : mesh.nodes) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';

  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (const auto& t : mesh.tets) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << nc << '\n';
  for (int c = 0; c < nc; ++c) out << "10\n";

  if (!data.vectors.empty() || !data.scalars.empty() || !data.int_scalars.empty())
    out << "CELL_DATA " << nc << '\n';
  for (const auto& [name, v] : data.vectors) {
    out << "VECTORS " << name << " double\n";
    for (const auto& x : v) out << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
  }
  for (const auto& [name, v] : data.scalars) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double x : v) out << x << '\n';
  }
  for (const auto& [name, v] : data.int_scalars) {
    out << "SCALARS " << name << " int 1\nLOOKUP_TABLE default\n";
    for (int x : v) out << x << '\n';
  }
  if (!out) throw std::runtime_error("vtk: write failed for '" + path.string() + "'");
}

}  // namespace twostep
