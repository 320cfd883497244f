#include "twostep/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "twostep/vtk.hpp"

namespace twostep {

// ---------------------------------------------------------------------------
// Materials

int MaterialTable::add(Material material) {
  if (!(material.sigma >= 0.0))
    throw std::invalid_argument("material '" + material.name + "': conductivity must be >= 0");
  if (!(material.mu_r >= 1.0))
    throw std::invalid_argument("material '" + material.name + "': relative permeability must be >= 1");
  if (find(material.name) >= 0)
    throw std::invalid_argument("material '" + material.name + "' defined twice");
  materials_.push_back(std::move(material));
  return size() - 1;
}

const Material& MaterialTable::operator[](int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("unknown material id " + std::to_string(id));
  return materials_[id];
}

int MaterialTable::find(std::string_view name) const {
  for (int i = 0; i < size(); ++i)
    if (materials_[i].name == name) return i;
  return -1;
}

// ---------------------------------------------------------------------------
// Cylinder specification

double CylinderSpec::total_length() const {
  double L = 0.0;
  for (const auto& s : segments) L += s.length;
  return L;
}

double CylinderSpec::layer_thickness() const { return 1e-3 / layers_per_mm; }

int CylinderSpec::layer_count() const {
  int n = 0;
  for (const auto& s : segments) n += static_cast<int>(std::lround(s.length / layer_thickness()));
  return n;
}

void CylinderSpec::validate() const {
  if (!(core_radius > 0.0)) throw std::invalid_argument("cylinder: core radius must be positive");
  if (!(outer_radius > core_radius))
    throw std::invalid_argument("cylinder: outer radius must exceed the core radius");
  if (segments.empty()) throw std::invalid_argument("cylinder: at least one segment is required");
  if (!(layers_per_mm > 0.0)) throw std::invalid_argument("cylinder: layers_per_mm must be positive");
  if (radial_level < 0) throw std::invalid_argument("cylinder: refinement level must be >= 0");
  if (!(grading > 0.0 && grading <= 1.0))
    throw std::invalid_argument("cylinder: grading factor must lie in (0, 1]");
  if (resolution.conductor_rings < 1 || resolution.air_rings < 1 || resolution.sectors < 6)
    throw std::invalid_argument("cylinder: need >= 1 conductor ring, >= 1 air ring, >= 6 sectors");
  const double t = layer_thickness();
  for (const auto& s : segments) {
    if (!(s.length > 0.0)) throw std::invalid_argument("cylinder: segment lengths must be positive");
    const double n = s.length / t;
    if (std::abs(n - std::round(n)) > 1e-9 * std::max(1.0, n) || std::round(n) < 1.0)
      throw std::invalid_argument("cylinder: layer thickness does not divide a segment length");
  }
}

// ---------------------------------------------------------------------------
// Disk triangulation

double DiskTriangulation::area() const {
  double a = 0.0;
  for (const auto& t : triangles) {
    const Vec2 e1 = nodes[t[1]] - nodes[t[0]];
    const Vec2 e2 = nodes[t[2]] - nodes[t[0]];
    a += 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
  }
  return a;
}

namespace {

void push_ccw(std::vector<std::array<int, 3>>& tris, const std::vector<Vec2>& nodes, int a, int b, int c) {
  const Vec2 e1 = nodes[b] - nodes[a];
  const Vec2 e2 = nodes[c] - nodes[a];
  if (e1.x() * e2.y() - e1.y() * e2.x() > 0.0)
    tris.push_back({a, b, c});
  else
    tris.push_back({a, c, b});
}

}  // namespace

DiskTriangulation build_disk_triangulation(double core_radius, double outer_radius, int level,
                                           double grading, const DiskResolution& res) {
  if (!(core_radius > 0.0) || !(outer_radius > 0.0))
    throw std::invalid_argument("disk: radii must be positive");
  if (!(outer_radius > core_radius)) throw std::invalid_argument("disk: need R < R_air");
  if (level < 0) throw std::invalid_argument("disk: refinement level must be >= 0");
  if (!(grading > 0.0 && grading <= 1.0)) throw std::invalid_argument("disk: grading must lie in (0, 1]");

  const int f = 1 << level;
  const int nc = res.conductor_rings * f;
  const int na = res.air_rings * f;

  // Conductor spacings shrink geometrically towards r = R by q per ring.
  const double q = std::pow(grading, 1.0 / f);
  std::vector<double> spacing(nc);
  for (int k = 0; k < nc; ++k) spacing[k] = std::pow(q, k);  // k = 0 innermost
  const double scale = core_radius / std::accumulate(spacing.begin(), spacing.end(), 0.0);

  DiskTriangulation d;
  d.ring_radius.push_back(0.0);
  d.ring_sectors.push_back(1);
  double r = 0.0;
  for (int k = 0; k < nc; ++k) {
    r += spacing[k] * scale;
    const double rk = (k == nc - 1) ? core_radius : r;
    d.ring_radius.push_back(rk);
    const int m = std::max(6, static_cast<int>(std::lround(res.sectors * f * rk / core_radius)));
    d.ring_sectors.push_back(m);
  }
  d.interface_ring = nc;
  for (int k = 1; k <= na; ++k) {
    const double rk = (k == na) ? outer_radius : core_radius + (outer_radius - core_radius) * k / na;
    d.ring_radius.push_back(rk);
    d.ring_sectors.push_back(res.sectors * f);
  }
  d.outer_ring = nc + na;

  std::vector<int> first(d.ring_radius.size());
  d.nodes.push_back(Vec2::Zero());
  d.node_ring.push_back(0);
  for (std::size_t ring = 1; ring < d.ring_radius.size(); ++ring) {
    first[ring] = static_cast<int>(d.nodes.size());
    const int m = d.ring_sectors[ring];
    for (int k = 0; k < m; ++k) {
      const double th = 2.0 * std::numbers::pi * k / m;
      d.nodes.emplace_back(d.ring_radius[ring] * std::cos(th), d.ring_radius[ring] * std::sin(th));
      d.node_ring.push_back(static_cast<int>(ring));
    }
  }

  // Centre fan.
  {
    const int m = d.ring_sectors[1];
    for (int k = 0; k < m; ++k) push_ccw(d.triangles, d.nodes, 0, first[1] + k, first[1] + (k + 1) % m);
  }
  // Zipper between consecutive rings: advance along whichever ring has the
  // next node at the smaller angle.
  for (std::size_t ring = 1; ring + 1 < d.ring_radius.size(); ++ring) {
    const int ma = d.ring_sectors[ring], mb = d.ring_sectors[ring + 1];
    const int a0 = first[ring], b0 = first[ring + 1];
    int i = 0, j = 0;
    while (i < ma || j < mb) {
      const bool advance_inner =
          j == mb || (i < ma && static_cast<long>(i + 1) * mb <= static_cast<long>(j + 1) * ma);
      if (advance_inner) {
        push_ccw(d.triangles, d.nodes, a0 + i % ma, a0 + (i + 1) % ma, b0 + j % mb);
        ++i;
      } else {
        push_ccw(d.triangles, d.nodes, a0 + i % ma, b0 + (j + 1) % mb, b0 + j % mb);
        ++j;
      }
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Mesh

std::string_view to_string(DomainClass c) {
  switch (c) {
    case DomainClass::EddyConductor: return "eddy";
    case DomainClass::StaticConductor: return "static";
    case DomainClass::Insulator: return "insulator";
  }
  return "?";
}

std::string_view to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Untagged: return "untagged";
    case BoundaryTag::Port1: return "port1";
    case BoundaryTag::Port2: return "port2";
    case BoundaryTag::Lateral: return "lateral";
  }
  return "?";
}

double Mesh::cell_volume(int cell) const {
  const auto& t = tets[cell];
  const Vec3 a = nodes[t[1]] - nodes[t[0]];
  const Vec3 b = nodes[t[2]] - nodes[t[0]];
  const Vec3 c = nodes[t[3]] - nodes[t[0]];
  return a.dot(b.cross(c)) / 6.0;
}

Vec3 Mesh::cell_centroid(int cell) const {
  const auto& t = tets[cell];
  return 0.25 * (nodes[t[0]] + nodes[t[1]] + nodes[t[2]] + nodes[t[3]]);
}

namespace {

// Rotations of the prism (0,1,2 bottom; 3,4,5 top) that bring vertex i to 0.
constexpr std::array<std::array<int, 6>, 6> kPrismRotation{{{0, 1, 2, 3, 4, 5},
                                                           {1, 2, 0, 4, 5, 3},
                                                           {2, 0, 1, 5, 3, 4},
                                                           {3, 5, 4, 0, 2, 1},
                                                           {4, 3, 5, 1, 0, 2},
                                                           {5, 4, 3, 2, 1, 0}}};

void split_prism(const std::array<int, 6>& v, std::vector<std::array<int, 4>>& out) {
  const int imin = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
  std::array<int, 6> p;
  for (int k = 0; k < 6; ++k) p[k] = v[kPrismRotation[imin][k]];
  if (std::min(p[1], p[5]) < std::min(p[2], p[4])) {
    out.push_back({p[0], p[1], p[2], p[5]});
    out.push_back({p[0], p[1], p[5], p[4]});
  } else {
    out.push_back({p[0], p[1], p[2], p[4]});
    out.push_back({p[0], p[4], p[2], p[5]});
  }
  out.push_back({p[0], p[4], p[5], p[3]});
}

}  // namespace

Mesh extrude_to_tets(const DiskTriangulation& disk, const CylinderSpec& spec) {
  spec.validate();
  Mesh mesh;

  mesh.z_planes.push_back(0.0);
  double z0 = 0.0;
  for (const auto& s : spec.segments) {
    const int n = static_cast<int>(std::lround(s.length / spec.layer_thickness()));
    for (int i = 1; i <= n; ++i) mesh.z_planes.push_back(i == n ? z0 + s.length : z0 + s.length * i / n);
    z0 += s.length;
  }
  const int nlayers = static_cast<int>(mesh.z_planes.size()) - 1;
  const int n2 = static_cast<int>(disk.nodes.size());

  mesh.nodes.reserve(static_cast<std::size_t>(n2) * (nlayers + 1));
  for (double z : mesh.z_planes)
    for (const auto& p : disk.nodes) mesh.nodes.emplace_back(p.x(), p.y(), z);

  std::vector<std::array<int, 4>> prism_tets;
  for (int k = 0; k < nlayers; ++k) {
    for (const auto& tri : disk.triangles) {
      const std::array<int, 6> v{tri[0] + k * n2,       tri[1] + k * n2,       tri[2] + k * n2,
                                 tri[0] + (k + 1) * n2, tri[1] + (k + 1) * n2, tri[2] + (k + 1) * n2};
      prism_tets.clear();
      split_prism(v, prism_tets);
      for (auto t : prism_tets) {
        mesh.tets.push_back(t);
        if (mesh.cell_volume(mesh.num_cells() - 1) < 0.0) std::swap(mesh.tets.back()[2], mesh.tets.back()[3]);
        if (!(mesh.cell_volume(mesh.num_cells() - 1) > 0.0))
          throw std::runtime_error("extrude: degenerate tetrahedron produced");
        mesh.cell_layer.push_back(k);
      }
    }
  }

  const int nc = mesh.num_cells();

  // Edges.
  {
    struct Rec { int lo, hi, cell, local; };
    std::vector<Rec> recs;
    recs.reserve(static_cast<std::size_t>(nc) * 6);
    for (int c = 0; c < nc; ++c)
      for (int e = 0; e < 6; ++e) {
        int a = mesh.tets[c][kTetEdges[e][0]], b = mesh.tets[c][kTetEdges[e][1]];
        if (a > b) std::swap(a, b);
        recs.push_back({a, b, c, e});
      }
    std::sort(recs.begin(), recs.end(), [](const Rec& x, const Rec& y) {
      return x.lo != y.lo ? x.lo < y.lo : x.hi != y.hi ? x.hi < y.hi : x.cell != y.cell ? x.cell < y.cell : x.local < y.local;
    });
    mesh.tet_edges.assign(nc, {});
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (i == 0 || recs[i].lo != recs[i - 1].lo || recs[i].hi != recs[i - 1].hi)
        mesh.edges.push_back({recs[i].lo, recs[i].hi});
      mesh.tet_edges[recs[i].cell][recs[i].local] = mesh.num_edges() - 1;
    }
  }

  // Faces.
  {
    struct Rec { std::array<int, 3> key; int cell; };
    std::vector<Rec> recs;
    recs.reserve(static_cast<std::size_t>(nc) * 4);
    for (int c = 0; c < nc; ++c)
      for (const auto& lf : kTetFaces) {
        std::array<int, 3> key{mesh.tets[c][lf[0]], mesh.tets[c][lf[1]], mesh.tets[c][lf[2]]};
        std::sort(key.begin(), key.end());
        recs.push_back({key, c});
      }
    std::sort(recs.begin(), recs.end(), [](const Rec& x, const Rec& y) {
      return x.key != y.key ? x.key < y.key : x.cell < y.cell;
    });
    for (std::size_t i = 0; i < recs.size();) {
      std::size_t j = i + 1;
      while (j < recs.size() && recs[j].key == recs[i].key) ++j;
      if (j - i > 2) throw std::runtime_error("extrude: non-manifold face");
      mesh.faces.push_back({recs[i].key, {recs[i].cell, j - i == 2 ? recs[i + 1].cell : -1}});
      i = j;
    }
  }

  mesh.node_on_boundary.assign(mesh.num_nodes(), 0);
  mesh.edge_on_boundary.assign(mesh.num_edges(), 0);
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& face = mesh.faces[f];
    if (!face.boundary()) continue;
    mesh.boundary_faces.push_back(f);
    for (int n : face.nodes) mesh.node_on_boundary[n] = 1;
    const int c = face.cells[0];
    for (int e = 0; e < 6; ++e) {
      const int a = mesh.tets[c][kTetEdges[e][0]], b = mesh.tets[c][kTetEdges[e][1]];
      const auto in_face = [&](int n) { return std::find(face.nodes.begin(), face.nodes.end(), n) != face.nodes.end(); };
      if (in_face(a) && in_face(b)) mesh.edge_on_boundary[mesh.tet_edges[c][e]] = 1;
    }
  }
  mesh.boundary_tag.assign(mesh.boundary_faces.size(), BoundaryTag::Untagged);
  return mesh;
}

DomainClass classify_point(const CylinderSpec& spec, const Vec3& x) {
  if (std::hypot(x.x(), x.y()) > spec.core_radius) return DomainClass::Insulator;
  double z0 = 0.0;
  for (const auto& s : spec.segments) {
    if (x.z() <= z0 + s.length || &s == &spec.segments.back())
      return s.eddy ? DomainClass::EddyConductor : DomainClass::StaticConductor;
    z0 += s.length;
  }
  return DomainClass::Insulator;
}

namespace {

int segment_of(const CylinderSpec& spec, double z) {
  double z0 = 0.0;
  for (int i = 0; i < static_cast<int>(spec.segments.size()); ++i) {
    z0 += spec.segments[i].length;
    if (z < z0) return i;
  }
  return static_cast<int>(spec.segments.size()) - 1;
}

}  // namespace

void classify(Mesh& mesh, const CylinderSpec& spec, const MaterialTable& materials) {
  spec.validate();
  if (materials[spec.air_material].sigma != 0.0)
    throw std::invalid_argument("classify: insulator material '" + materials[spec.air_material].name +
                                "' must have zero conductivity");
  for (const auto& s : spec.segments) (void)materials[s.material];

  const int nc = mesh.num_cells();
  mesh.cell_material.assign(nc, spec.air_material);
  mesh.cell_class.assign(nc, DomainClass::Insulator);
  for (int c = 0; c < nc; ++c) {
    bool inside = true;
    for (int n : mesh.tets[c])
      inside = inside && std::hypot(mesh.nodes[n].x(), mesh.nodes[n].y()) <= spec.core_radius * (1.0 + 1e-12);
    if (!inside) continue;
    const int k = mesh.cell_layer[c];
    const auto& seg = spec.segments[segment_of(spec, 0.5 * (mesh.z_planes[k] + mesh.z_planes[k + 1]))];
    mesh.cell_material[c] = seg.material;
    mesh.cell_class[c] = seg.eddy ? DomainClass::EddyConductor : DomainClass::StaticConductor;
    if (!seg.eddy && materials[seg.material].sigma <= 0.0)
      throw std::invalid_argument("classify: magneto-static region '" + materials[seg.material].name +
                                  "' must be conductive");
  }

  const double L = spec.total_length();
  const double ztol = 1e-9 * L;
  const double rtol = 1e-9 * spec.outer_radius;
  mesh.node_port.assign(mesh.num_nodes(), 0);
  for (std::size_t i = 0; i < mesh.boundary_faces.size(); ++i) {
    const Face& face = mesh.faces[mesh.boundary_faces[i]];
    bool bottom = true, top = true, lateral = true;
    for (int n : face.nodes) {
      const Vec3& p = mesh.nodes[n];
      bottom = bottom && std::abs(p.z()) <= ztol;
      top = top && std::abs(p.z() - L) <= ztol;
      lateral = lateral && std::abs(std::hypot(p.x(), p.y()) - spec.outer_radius) <= rtol;
    }
    BoundaryTag tag = BoundaryTag::Untagged;
    if (bottom) tag = BoundaryTag::Port1;
    else if (top) tag = BoundaryTag::Port2;
    else if (lateral) tag = BoundaryTag::Lateral;
    else throw std::runtime_error("classify: boundary face could not be tagged");
    mesh.boundary_tag[i] = tag;
    if (tag == BoundaryTag::Port1 || tag == BoundaryTag::Port2)
      for (int n : face.nodes) mesh.node_port[n] = static_cast<std::uint8_t>(tag);
  }

  mesh.interface_faces.clear();
  for (int f = 0; f < static_cast<int>(mesh.faces.size()); ++f) {
    const Face& face = mesh.faces[f];
    if (face.boundary()) continue;
    const bool s0 = mesh.cell_class[face.cells[0]] == DomainClass::StaticConductor;
    const bool s1 = mesh.cell_class[face.cells[1]] == DomainClass::StaticConductor;
    if (s0 != s1) mesh.interface_faces.push_back(f);
  }

  // A conductive path must join the two ports.
  std::vector<std::vector<int>> adj(nc);
  for (const auto& face : mesh.faces)
    if (!face.boundary()) {
      adj[face.cells[0]].push_back(face.cells[1]);
      adj[face.cells[1]].push_back(face.cells[0]);
    }
  std::vector<char> seen(nc, 0), at_port2(nc, 0);
  std::queue<int> queue;
  for (std::size_t i = 0; i < mesh.boundary_faces.size(); ++i) {
    const int c = mesh.faces[mesh.boundary_faces[i]].cells[0];
    if (materials[mesh.cell_material[c]].sigma <= 0.0) continue;
    if (mesh.boundary_tag[i] == BoundaryTag::Port1 && !seen[c]) {
      seen[c] = 1;
      queue.push(c);
    }
    if (mesh.boundary_tag[i] == BoundaryTag::Port2) at_port2[c] = 1;
  }
  bool connected = false;
  while (!queue.empty() && !connected) {
    const int c = queue.front();
    queue.pop();
    connected = at_port2[c];
    for (int nb : adj[c])
      if (!seen[nb] && materials[mesh.cell_material[nb]].sigma > 0.0) {
        seen[nb] = 1;
        queue.push(nb);
      }
  }
  if (!connected) throw std::runtime_error("classify: no conductive path between the ports");
}

Mesh build_cylinder_mesh(const CylinderSpec& spec, const MaterialTable& materials) {
  spec.validate();
  const auto disk = build_disk_triangulation(spec.core_radius, spec.outer_radius, spec.radial_level,
                                             spec.grading, spec.resolution);
  Mesh mesh = extrude_to_tets(disk, spec);
  classify(mesh, spec, materials);
  return mesh;
}

void write_mesh_vtk(const Mesh& mesh, const std::filesystem::path& path) {
  VtkCellData data;
  std::vector<int> cls(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) cls[c] = static_cast<int>(mesh.cell_class[c]);
  data.int_scalars.emplace_back("material", mesh.cell_material);
  data.int_scalars.emplace_back("domain_class", std::move(cls));
  data.int_scalars.emplace_back("layer", mesh.cell_layer);
  write_vtk_unstructured(mesh, data, path, "twostep mesh");
}

}  // namespace twostep
