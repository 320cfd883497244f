#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "twostep/geometry.hpp"

namespace twostep {

/// Named per-cell arrays for a legacy VTK unstructured grid.
struct VtkCellData {
  std::vector<std::pair<std::string, std::vector<Vec3>>> vectors;
  std::vector<std::pair<std::string, std::vector<double>>> scalars;
  std::vector<std::pair<std::string, std::vector<int>>> int_scalars;
};

/// Writes points, type-10 tetrahedra and the given cell data as ASCII.
void write_vtk_unstructured(const Mesh& mesh, const VtkCellData& data,
                            const std::filesystem::path& path,
                            const std::string& title = "twostep");

}  // namespace twostep
