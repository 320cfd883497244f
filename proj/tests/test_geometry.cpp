#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "twostep/config.hpp"
#include "twostep/geometry.hpp"

using namespace twostep;

namespace {

MaterialTable iron_copper(int& air, int& iron, int& copper) {
  MaterialTable m;
  air = m.add({"air", 0.0, 1.0});
  iron = m.add({"iron", 1e7, 1500.0});
  copper = m.add({"copper", 6e7, 1.0});
  return m;
}

CylinderSpec three_portion(int iron, int copper, bool copper_eddy) {
  CylinderSpec s;
  s.segments = {{2e-3, iron, true}, {4e-3, copper, copper_eddy}, {2e-3, iron, true}};
  return s;
}

}  // namespace

TEST_CASE("disk triangulation resolves the conductor radius") {
  const auto d = build_disk_triangulation(3e-3, 8e-3, 0, 0.7);
  double rmax = 0.0;
  for (const auto& p : d.nodes) rmax = std::max(rmax, p.norm());
  CHECK(rmax == doctest::Approx(8e-3).epsilon(1e-14));
  int on_core = 0;
  for (const auto& p : d.nodes)
    if (std::abs(p.norm() - 3e-3) < 1e-15) ++on_core;
  CHECK(on_core == DiskResolution{}.sectors);
  CHECK(d.ring_radius[d.interface_ring] == 3e-3);

  // finest radial spacing inside the conductor at level 0
  double finest = 1.0;
  for (int r = 1; r <= d.interface_ring; ++r) finest = std::min(finest, d.ring_radius[r] - d.ring_radius[r - 1]);
  CHECK(finest <= 0.3e-3);
}

TEST_CASE("disk area converges from below to the circle") {
  const double exact = std::numbers::pi * 64e-6;
  double prev = 0.0;
  for (int level = 0; level < 3; ++level) {
    const double a = build_disk_triangulation(3e-3, 8e-3, level, 0.7).area();
    CHECK(a < exact);
    CHECK(a > prev);
    prev = a;
  }
  CHECK(std::abs(prev - exact) / exact < 0.01);
}

TEST_CASE("refinement quadruples the triangle count") {
  const auto a = build_disk_triangulation(3e-3, 8e-3, 0, 0.7);
  const auto b = build_disk_triangulation(3e-3, 8e-3, 1, 0.7);
  const double ratio = double(b.triangles.size()) / double(a.triangles.size());
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.06));
  CHECK(b.ring_radius.size() - 1 == 2 * (a.ring_radius.size() - 1));
}

TEST_CASE("disk triangulation rejects bad radii") {
  CHECK_THROWS(build_disk_triangulation(0.0, 8e-3, 0, 0.7));
  CHECK_THROWS(build_disk_triangulation(8e-3, 8e-3, 0, 0.7));
  CHECK_THROWS(build_disk_triangulation(9e-3, 8e-3, 0, 0.7));
}

TEST_CASE("one prism splits into three tetrahedra of exact total volume") {
  DiskTriangulation d;
  d.nodes = {Vec2(0, 0), Vec2(1e-3, 0), Vec2(0.2e-3, 0.9e-3)};
  d.triangles = {{0, 1, 2}};
  CylinderSpec s;
  s.segments = {{1e-3, 1, true}};
  const Mesh m = extrude_to_tets(d, s);
  REQUIRE(m.num_cells() == 3);
  double v = 0.0;
  for (int c = 0; c < 3; ++c) {
    CHECK(m.cell_volume(c) > 0.0);
    v += m.cell_volume(c);
  }
  CHECK(v == doctest::Approx(d.area() * 1e-3).epsilon(1e-14));
}

TEST_CASE("shared quadrilateral faces are split identically") {
  DiskTriangulation d;
  d.nodes = {Vec2(0, 0), Vec2(1e-3, 0), Vec2(0, 1e-3), Vec2(1e-3, 1e-3)};
  d.triangles = {{0, 1, 3}, {0, 3, 2}};
  CylinderSpec s;
  s.segments = {{1e-3, 1, true}};
  const Mesh m = extrude_to_tets(d, s);
  std::map<std::array<int, 3>, int> count;
  for (const auto& t : m.tets)
    for (const auto& f : kTetFaces) {
      std::array<int, 3> k{t[f[0]], t[f[1]], t[f[2]]};
      std::sort(k.begin(), k.end());
      ++count[k];
    }
  int shared = 0;
  for (const auto& [k, n] : count) {
    CHECK(n <= 2);
    if (n == 2) {
      const bool on_diag = std::all_of(k.begin(), k.end(), [&](int v) {
        const int p = v % 4;
        return p == 0 || p == 3;
      });
      if (on_diag) ++shared;
    }
  }
  CHECK(shared == 2);
}

TEST_CASE("extrusion rejects a layer thickness that does not divide a segment") {
  CylinderSpec s;
  s.segments = {{1.5e-3, 1, true}};
  CHECK_THROWS_AS(extrude_to_tets(build_disk_triangulation(3e-3, 8e-3, 0, 0.7), s), std::invalid_argument);
}

TEST_CASE("mesh conformity, orientation and volume") {
  int air, iron, copper;
  const auto mats = iron_copper(air, iron, copper);
  const auto spec = three_portion(iron, copper, true);
  const Mesh m = build_cylinder_mesh(spec, mats);
  const auto disk = build_disk_triangulation(spec.core_radius, spec.outer_radius, 0, spec.grading);

  double v = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    REQUIRE(m.cell_volume(c) > 0.0);
    v += m.cell_volume(c);
  }
  CHECK(std::abs(v - disk.area() * spec.total_length()) <= 1e-12 * v);

  std::map<std::array<int, 3>, int> count;
  for (const auto& t : m.tets)
    for (const auto& f : kTetFaces) {
      std::array<int, 3> k{t[f[0]], t[f[1]], t[f[2]]};
      std::sort(k.begin(), k.end());
      ++count[k];
    }
  int boundary = 0;
  for (const auto& [k, n] : count) {
    REQUIRE((n == 1 || n == 2));
    boundary += n == 1;
  }
  CHECK(boundary == static_cast<int>(m.boundary_faces.size()));

  for (const auto& e : m.edges) CHECK(e[0] < e[1]);
  for (auto tag : m.boundary_tag) CHECK(tag != BoundaryTag::Untagged);

  // cell classes agree with the pointwise classification
  for (int c = 0; c < m.num_cells(); ++c) CHECK(m.cell_class[c] == classify_point(spec, m.cell_centroid(c)));
}

TEST_CASE("boundary tags partition the boundary geometrically") {
  int air, iron, copper;
  const auto mats = iron_copper(air, iron, copper);
  const auto spec = three_portion(iron, copper, true);
  const Mesh m = build_cylinder_mesh(spec, mats);
  const double L = spec.total_length();
  for (std::size_t i = 0; i < m.boundary_faces.size(); ++i) {
    const auto& f = m.faces[m.boundary_faces[i]];
    Vec3 c = Vec3::Zero();
    for (int n : f.nodes) c += m.nodes[n] / 3.0;
    if (std::abs(c.z()) < 1e-12) CHECK(m.boundary_tag[i] == BoundaryTag::Port1);
    else if (std::abs(c.z() - L) < 1e-12) CHECK(m.boundary_tag[i] == BoundaryTag::Port2);
    else CHECK(m.boundary_tag[i] == BoundaryTag::Lateral);
  }
}

TEST_CASE("iron and copper cells only meet on layer planes") {
  int air, iron, copper;
  const auto mats = iron_copper(air, iron, copper);
  const Mesh m = build_cylinder_mesh(three_portion(iron, copper, true), mats);
  int found = 0;
  for (const auto& f : m.faces) {
    if (f.boundary()) continue;
    const int a = m.cell_material[f.cells[0]], b = m.cell_material[f.cells[1]];
    if (!((a == iron && b == copper) || (a == copper && b == iron))) continue;
    ++found;
    const double z = m.nodes[f.nodes[0]].z();
    for (int n : f.nodes) CHECK(m.nodes[n].z() == z);
    CHECK(std::find(m.z_planes.begin(), m.z_planes.end(), z) != m.z_planes.end());
  }
  CHECK(found > 0);
}

TEST_CASE("single iron segment has no static region and no interface") {
  const RunConfig c = preset_config(1, 2, 0);
  const Mesh m = build_cylinder_mesh(c.geometry, c.materials);
  CHECK(m.interface_faces.empty());
  CHECK(std::count(m.cell_class.begin(), m.cell_class.end(), DomainClass::StaticConductor) == 0);
}

TEST_CASE("static copper: static cells are exactly copper, interface on the two planes") {
  int air, iron, copper;
  const auto mats = iron_copper(air, iron, copper);
  const auto spec = three_portion(iron, copper, false);
  const Mesh m = build_cylinder_mesh(spec, mats);
  for (int c = 0; c < m.num_cells(); ++c)
    CHECK((m.cell_class[c] == DomainClass::StaticConductor) == (m.cell_material[c] == copper));
  std::set<double> planes;
  for (int fi : m.interface_faces) {
    const auto& f = m.faces[fi];
    const double z = m.nodes[f.nodes[0]].z();
    const bool flat = m.nodes[f.nodes[1]].z() == z && m.nodes[f.nodes[2]].z() == z;
    if (flat) {
      planes.insert(z);
    } else {
      // lateral copper surface facing the air
      CHECK((m.cell_class[f.cells[0]] == DomainClass::Insulator || m.cell_class[f.cells[1]] == DomainClass::Insulator));
    }
  }
  CHECK(planes == std::set<double>{2e-3, 6e-3});

  // interface faces are exactly the eddy-or-insulator / static pairs
  std::size_t expected = 0;
  for (const auto& f : m.faces)
    if (!f.boundary() &&
        ((m.cell_class[f.cells[0]] == DomainClass::StaticConductor) !=
         (m.cell_class[f.cells[1]] == DomainClass::StaticConductor)))
      ++expected;
  CHECK(m.interface_faces.size() == expected);
}

TEST_CASE("classification rejects non-conductive configurations") {
  MaterialTable m;
  const int air = m.add({"air", 0.0, 1.0});
  const int glass = m.add({"glass", 0.0, 1.0});
  CylinderSpec s;
  s.air_material = air;
  s.segments = {{2e-3, glass, true}};
  CHECK_THROWS(build_cylinder_mesh(s, m));
  s.segments = {{2e-3, glass, false}};
  CHECK_THROWS(build_cylinder_mesh(s, m));
}

TEST_CASE("tags are geometric: refinement keeps the classification of points") {
  int air, iron, copper;
  const auto mats = iron_copper(air, iron, copper);
  auto spec = three_portion(iron, copper, false);
  const Mesh coarse = build_cylinder_mesh(spec, mats);
  spec.radial_level = 1;
  spec.layers_per_mm = 2.0;
  const Mesh fine = build_cylinder_mesh(spec, mats);
  // every fine cell lies inside a region of the same class as its centroid in the coarse spec
  for (int c = 0; c < fine.num_cells(); c += 7)
    CHECK(fine.cell_class[c] == classify_point(spec, fine.cell_centroid(c)));
  for (int c = 0; c < coarse.num_cells(); c += 7)
    CHECK(coarse.cell_class[c] == classify_point(spec, coarse.cell_centroid(c)));
}

TEST_CASE("mesh VTK export has consistent counts") {
  const RunConfig c = preset_config(1, 2, 0);
  const Mesh m = build_cylinder_mesh(c.geometry, c.materials);
  const auto path = std::filesystem::temp_directory_path() / "twostep_mesh_test.vtk";
  write_mesh_vtk(m, path);
  std::ifstream in(path);
  std::string word;
  int points = -1, cells = -1, types = -1, data = -1;
  while (in >> word) {
    if (word == "POINTS") in >> points;
    else if (word == "CELLS") in >> cells;
    else if (word == "CELL_TYPES") in >> types;
    else if (word == "CELL_DATA") in >> data;
  }
  CHECK(points == m.num_nodes());
  CHECK(cells == m.num_cells());
  CHECK(types == m.num_cells());
  CHECK(data == m.num_cells());
  std::filesystem::remove(path);
}
