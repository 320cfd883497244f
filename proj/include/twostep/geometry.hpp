#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace twostep {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Vacuum permeability in H/m.
inline constexpr double kMu0 = 4.0e-7 * std::numbers::pi;

struct Material {
  std::string name;
  double sigma = 0.0;  // S/m
  double mu_r = 1.0;

  double mu() const { return mu_r * kMu0; }
  bool operator==(const Material&) const = default;
};

/// Materials indexed by a dense integer id.
class MaterialTable {
 public:
  /// Validates and appends; returns the new id.
  int add(Material material);
  const Material& operator[](int id) const;
  /// Returns -1 when no material carries this name.
  int find(std::string_view name) const;
  int size() const { return static_cast<int>(materials_.size()); }
  const std::vector<Material>& all() const { return materials_; }

  bool operator==(const MaterialTable&) const = default;

 private:
  std::vector<Material> materials_;
};

struct Segment {
  double length = 0.0;  // m
  int material = 0;
  bool eddy = true;
  bool operator==(const Segment&) const = default;
};

/// Ring and sector counts of the disk triangulation at refinement level 0.
struct DiskResolution {
  int conductor_rings = 5;
  int air_rings = 4;
  int sectors = 16;  // nodes on the r = R ring
  bool operator==(const DiskResolution&) const = default;
};

/// A finite cylinder: conductor core of radius R split into axial segments,
/// surrounded by an insulating annulus up to R_air.
struct CylinderSpec {
  double core_radius = 3e-3;
  double outer_radius = 8e-3;
  std::vector<Segment> segments;
  int air_material = 0;
  double layers_per_mm = 1.0;
  int radial_level = 0;
  double grading = 0.7;
  DiskResolution resolution;

  double total_length() const;
  double layer_thickness() const;
  int layer_count() const;
  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;

  bool operator==(const CylinderSpec&) const = default;
};

struct DiskTriangulation {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<int> node_ring;                 // 0 is the centre node
  std::vector<double> ring_radius;
  std::vector<int> ring_sectors;
  int interface_ring = 0;  // ring lying exactly at r = R
  int outer_ring = 0;

  double area() const;
};

/// Ring-based triangulation of the disk of radius `outer_radius`, with a
/// node ring exactly at `core_radius`.  Each level doubles rings and sectors.
DiskTriangulation build_disk_triangulation(double core_radius, double outer_radius,
                                           int level, double grading,
                                           const DiskResolution& resolution = {});

enum class DomainClass : std::uint8_t { EddyConductor = 0, StaticConductor = 1, Insulator = 2 };
enum class BoundaryTag : std::uint8_t { Untagged = 0, Port1 = 1, Port2 = 2, Lateral = 3 };

std::string_view to_string(DomainClass c);
std::string_view to_string(BoundaryTag t);

/// Local edge table of a tetrahedron: local node pairs (a, b) with a < b.
inline constexpr std::array<std::array<int, 2>, 6> kTetEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Local face table: face f is opposite local node f.
inline constexpr std::array<std::array<int, 3>, 4> kTetFaces{
    {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

struct Face {
  std::array<int, 3> nodes;  // ascending global ids
  std::array<int, 2> cells;  // cells[1] == -1 on the boundary
  bool boundary() const { return cells[1] < 0; }
};

struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::array<int, 2>> edges;      // lo < hi, oriented lo -> hi
  std::vector<std::array<int, 6>> tet_edges;  // global edge of each local edge
  std::vector<Face> faces;
  std::vector<int> boundary_faces;  // indices into faces
  std::vector<BoundaryTag> boundary_tag;  // parallel to boundary_faces
  std::vector<int> interface_faces;       // indices into faces

  std::vector<int> cell_layer;
  std::vector<double> z_planes;

  std::vector<int> cell_material;
  std::vector<DomainClass> cell_class;
  std::vector<std::uint8_t> node_port;         // 0, 1 or 2
  std::vector<std::uint8_t> node_on_boundary;  // on some boundary face
  std::vector<std::uint8_t> edge_on_boundary;  // on some boundary face

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_cells() const { return static_cast<int>(tets.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double cell_volume(int cell) const;
  Vec3 cell_centroid(int cell) const;
  /// Signed edge orientation of local edge `e` of `cell` relative to the global one.
  double edge_sign(int cell, int e) const {
    const auto& t = tets[cell];
    return t[kTetEdges[e][0]] < t[kTetEdges[e][1]] ? 1.0 : -1.0;
  }
  bool in_eddy_region(int cell) const { return cell_class[cell] != DomainClass::StaticConductor; }
};

/// Extrudes the disk through uniform layers and splits every prism into three
/// tetrahedra with diagonals anchored at the smallest global node id.
Mesh extrude_to_tets(const DiskTriangulation& disk, const CylinderSpec& spec);

/// Geometric classification of a point (used by `classify` and for checks).
DomainClass classify_point(const CylinderSpec& spec, const Vec3& x);

/// Tags cells, boundary faces, port nodes and the eddy/static interface.
void classify(Mesh& mesh, const CylinderSpec& spec, const MaterialTable& materials);

/// Convenience: disk, extrusion and classification in one call.
Mesh build_cylinder_mesh(const CylinderSpec& spec, const MaterialTable& materials);

/// Legacy ASCII VTK export with integer cell tags.
void write_mesh_vtk(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace twostep
