#include "twostep/discretization.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace twostep {

// ---------------------------------------------------------------------------
// Element level

TetGeometry tet_geometry(const std::array<Vec3, 4>& v) {
  Eigen::Matrix3d J;
  J.col(0) = v[1] - v[0];
  J.col(1) = v[2] - v[0];
  J.col(2) = v[3] - v[0];
  const double det = J.determinant();
  const double scale = (v[1] - v[0]).norm() * (v[2] - v[0]).norm() * (v[3] - v[0]).norm();
  if (!(det > 1e-14 * scale)) throw std::invalid_argument("degenerate or inverted tetrahedron");
  const Eigen::Matrix3d Jinv = J.inverse();
  TetGeometry g;
  g.vertices = v;
  g.volume = det / 6.0;
  for (int k = 0; k < 3; ++k) g.grad[k + 1] = Jinv.row(k).transpose();
  g.grad[0] = -(g.grad[1] + g.grad[2] + g.grad[3]);
  return g;
}

TetGeometry tet_geometry(const Mesh& mesh, int cell) {
  const auto& t = mesh.tets[cell];
  return tet_geometry({mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], mesh.nodes[t[3]]});
}

const TetQuadrature& tet_quadrature() {
  static const TetQuadrature q = [] {
    constexpr double a = 0.5854101966249685;
    constexpr double b = 0.1381966011250105;
    TetQuadrature r;
    r.points = {Vec4(a, b, b, b), Vec4(b, a, b, b), Vec4(b, b, a, b), Vec4(b, b, b, a)};
    r.weights = {0.25, 0.25, 0.25, 0.25};
    return r;
  }();
  return q;
}

Vec3 edge_basis(const TetGeometry& g, int e, const Vec4& bary) {
  const int a = kTetEdges[e][0], b = kTetEdges[e][1];
  return bary[a] * g.grad[b] - bary[b] * g.grad[a];
}

Vec3 edge_curl(const TetGeometry& g, int e) {
  const int a = kTetEdges[e][0], b = kTetEdges[e][1];
  return 2.0 * g.grad[a].cross(g.grad[b]);
}

Mat4 elem_p1_stiffness(const TetGeometry& g, double sigma) {
  Mat4 K;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) K(i, j) = K(j, i) = sigma * g.volume * g.grad[i].dot(g.grad[j]);
  return K;
}

Mat6 elem_edge_mass(const TetGeometry& g, double sigma) {
  Mat6 M = Mat6::Zero();
  if (sigma == 0.0) return M;
  const auto& q = tet_quadrature();
  for (int k = 0; k < 4; ++k) {
    std::array<Vec3, 6> w;
    for (int e = 0; e < 6; ++e) w[e] = edge_basis(g, e, q.points[k]);
    for (int e = 0; e < 6; ++e)
      for (int f = 0; f <= e; ++f) M(e, f) += q.weights[k] * w[e].dot(w[f]);
  }
  for (int e = 0; e < 6; ++e)
    for (int f = 0; f <= e; ++f) M(f, e) = M(e, f) = sigma * g.volume * M(e, f);
  return M;
}

Mat6 elem_curlcurl(const TetGeometry& g, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("curl-curl: reluctivity must be positive");
  std::array<Vec3, 6> c;
  for (int e = 0; e < 6; ++e) c[e] = edge_curl(g, e);
  Mat6 K;
  for (int e = 0; e < 6; ++e)
    for (int f = 0; f <= e; ++f) K(e, f) = K(f, e) = nu * g.volume * c[e].dot(c[f]);
  return K;
}

Vec3 edge_field(const Mesh& mesh, const TetGeometry& g, int cell, std::span<const double> coeffs,
                const Vec4& bary) {
  Vec3 v = Vec3::Zero();
  for (int e = 0; e < 6; ++e) v += mesh.edge_sign(cell, e) * coeffs[mesh.tet_edges[cell][e]] * edge_basis(g, e, bary);
  return v;
}

Vec3 edge_field_curl(const Mesh& mesh, const TetGeometry& g, int cell, std::span<const double> coeffs) {
  Vec3 v = Vec3::Zero();
  for (int e = 0; e < 6; ++e) v += mesh.edge_sign(cell, e) * coeffs[mesh.tet_edges[cell][e]] * edge_curl(g, e);
  return v;
}

Vec3 nodal_gradient(const Mesh& mesh, const TetGeometry& g, int cell, std::span<const double> nodal) {
  Vec3 v = Vec3::Zero();
  for (int i = 0; i < 4; ++i) v += nodal[mesh.tets[cell][i]] * g.grad[i];
  return v;
}

// ---------------------------------------------------------------------------
// Nodal space

NodalDofSystem NodalDofSystem::build(const Mesh& mesh, const MaterialTable& materials) {
  NodalDofSystem s;
  const int nn = mesh.num_nodes();
  std::vector<char> conductive(nn, 0);
  for (int c = 0; c < mesh.num_cells(); ++c)
    if (materials[mesh.cell_material[c]].sigma > 0.0)
      for (int n : mesh.tets[c]) conductive[n] = 1;
  s.free_index.assign(nn, -1);
  s.phi1.assign(nn, 0.0);
  s.phi2.assign(nn, 0.0);
  for (int n = 0; n < nn; ++n) {
    if (mesh.node_port[n] == 1) s.phi1[n] = 1.0;
    else if (mesh.node_port[n] == 2) s.phi2[n] = 1.0;
    else if (conductive[n]) s.free_index[n] = s.num_free++;
  }
  return s;
}

void NodalDofSystem::set_phi1(const Mesh& mesh, std::vector<double> values) {
  if (values.size() != phi1.size()) throw std::invalid_argument("Phi1: size mismatch");
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (mesh.node_port[n] == 1 && values[n] != 1.0) throw std::invalid_argument("Phi1 must equal 1 on port 1");
    if (mesh.node_port[n] == 2 && values[n] != 0.0) throw std::invalid_argument("Phi1 must vanish on port 2");
  }
  phi1 = std::move(values);
}

std::vector<double> NodalDofSystem::compose(std::span<const double> free_values, double v1) const {
  std::vector<double> phi(free_index.size());
  for (std::size_t n = 0; n < phi.size(); ++n)
    phi[n] = (free_index[n] >= 0 ? free_values[free_index[n]] : 0.0) + v1 * phi1[n];
  return phi;
}

// ---------------------------------------------------------------------------
// Edge space

EdgeDofSystem EdgeDofSystem::build(const Mesh& mesh) {
  EdgeDofSystem s;
  s.interior_dof.assign(mesh.num_edges(), -1);
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (!mesh.edge_on_boundary[e]) s.interior_dof[e] = s.num_interior++;
  s.eta_dof.assign(mesh.num_nodes(), -1);
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (mesh.node_on_boundary[n] && mesh.node_port[n] == 0) s.eta_dof[n] = s.num_interior + s.num_eta++;
  return s;
}

int EdgeDofSystem::terms(const Mesh& mesh, int edge, std::array<Term, 2>& out) const {
  if (interior_dof[edge] >= 0) {
    out[0] = {interior_dof[edge], 1.0};
    return 1;
  }
  int k = 0;
  const int lo = mesh.edges[edge][0], hi = mesh.edges[edge][1];
  if (eta_dof[hi] >= 0) out[k++] = {eta_dof[hi], 1.0};
  if (eta_dof[lo] >= 0) out[k++] = {eta_dof[lo], -1.0};
  return k;
}

std::vector<double> EdgeDofSystem::expand(const Mesh& mesh, std::span<const double> x) const {
  std::vector<double> full(mesh.num_edges(), 0.0);
  std::array<Term, 2> t;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const int k = terms(mesh, e, t);
    double v = 0.0;
    for (int i = 0; i < k; ++i) v += t[i].coeff * x[t[i].dof];
    full[e] = v;
  }
  return full;
}

std::vector<double> EdgeDofSystem::from_gradient(const Mesh& mesh, std::span<const double> nodal) const {
  std::vector<double> x(size(), 0.0);
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (interior_dof[e] >= 0) x[interior_dof[e]] = nodal[mesh.edges[e][1]] - nodal[mesh.edges[e][0]];
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (eta_dof[n] >= 0) x[eta_dof[n]] = nodal[n];
  return x;
}

std::vector<double> EdgeDofSystem::gradient_transpose(const Mesh& mesh, std::span<const double> r) const {
  std::vector<double> y(mesh.num_nodes(), 0.0);
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (interior_dof[e] >= 0) {
      y[mesh.edges[e][1]] += r[interior_dof[e]];
      y[mesh.edges[e][0]] -= r[interior_dof[e]];
    }
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (eta_dof[n] >= 0) y[n] += r[eta_dof[n]];
    if (mesh.node_port[n] != 0) y[n] = 0.0;
  }
  return y;
}

std::vector<double> gradient(const Mesh& mesh, std::span<const double> nodal) {
  std::vector<double> g(mesh.num_edges());
  for (int e = 0; e < mesh.num_edges(); ++e) g[e] = nodal[mesh.edges[e][1]] - nodal[mesh.edges[e][0]];
  return g;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

struct Expansion {
  std::array<EdgeDofSystem::Term, 3> t;
  int n = 0;
};

// Adds sum_{a,b} c_a c_b K(a,b) into lower-triangle triplets.
template <int N, class Mat>
void scatter_lower(const std::array<Expansion, N>& ex, const Mat& K, std::vector<Triplet>& out) {
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      const double k = K(a, b);
      if (k == 0.0) continue;
      for (int i = 0; i < ex[a].n; ++i)
        for (int j = 0; j < ex[b].n; ++j) {
          const int p = ex[a].t[i].dof, q = ex[b].t[j].dof;
          if (p >= q) out.push_back({p, q, ex[a].t[i].coeff * ex[b].t[j].coeff * k});
        }
    }
}

}  // namespace

Step1System assemble_step1(const Mesh& mesh, const MaterialTable& materials, const NodalDofSystem& nodal,
                           double I1) {
  Step1System sys;
  sys.v1_index = nodal.num_free;
  std::vector<Triplet> trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double sigma = materials[mesh.cell_material[c]].sigma;
    if (sigma == 0.0) continue;
    const Mat4 K = elem_p1_stiffness(tet_geometry(mesh, c), sigma);
    std::array<Expansion, 4> ex;
    for (int i = 0; i < 4; ++i) {
      const int n = mesh.tets[c][i];
      if (nodal.free_index[n] >= 0) ex[i].t[ex[i].n++] = {nodal.free_index[n], 1.0};
      if (nodal.phi1[n] != 0.0) ex[i].t[ex[i].n++] = {sys.v1_index, nodal.phi1[n]};
    }
    scatter_lower<4>(ex, K, trip);
  }
  sys.matrix = SparseSymmetric::from_lower_triplets(nodal.num_free + 1, trip);
  sys.rhs.assign(nodal.num_free + 1, 0.0);
  sys.rhs[sys.v1_index] = -I1;
  return sys;
}

SparseSymmetric assemble_nodal_stiffness(const Mesh& mesh, const MaterialTable& materials) {
  std::vector<Triplet> trip;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double sigma = materials[mesh.cell_material[c]].sigma;
    if (sigma == 0.0) continue;
    const Mat4 K = elem_p1_stiffness(tet_geometry(mesh, c), sigma);
    std::array<Expansion, 4> ex;
    for (int i = 0; i < 4; ++i) ex[i].t[ex[i].n++] = {mesh.tets[c][i], 1.0};
    scatter_lower<4>(ex, K, trip);
  }
  return SparseSymmetric::from_lower_triplets(mesh.num_nodes(), trip);
}

Step2Operators assemble_step2_operators(const Mesh& mesh, const MaterialTable& materials,
                                        const EdgeDofSystem& edges, const NodalDofSystem& nodal) {
  Step2Operators ops;
  ops.w_index = edges.size();
  ops.grad_phi1 = gradient(mesh, nodal.phi1);
  std::vector<std::vector<Triplet>> ch(2);
  std::array<EdgeDofSystem::Term, 2> t;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const Material& mat = materials[mesh.cell_material[c]];
    const TetGeometry g = tet_geometry(mesh, c);
    std::array<Expansion, 6> ex;
    for (int e = 0; e < 6; ++e) {
      const double s = mesh.edge_sign(c, e);
      const int k = edges.terms(mesh, mesh.tet_edges[c][e], t);
      for (int i = 0; i < k; ++i) ex[e].t[ex[e].n++] = {t[i].dof, s * t[i].coeff};
    }
    scatter_lower<6>(ex, elem_curlcurl(g, 1.0 / mat.mu()), ch[0]);

    if (mesh.in_eddy_region(c) && mat.sigma > 0.0) {
      for (int e = 0; e < 6; ++e) {
        const double gl = mesh.edge_sign(c, e) * ops.grad_phi1[mesh.tet_edges[c][e]];
        if (gl != 0.0) ex[e].t[ex[e].n++] = {ops.w_index, gl};
      }
      scatter_lower<6>(ex, elem_edge_mass(g, mat.sigma), ch[1]);
    }
  }
  // Keep W1 in the pattern even when it decouples.
  ch[0].push_back({ops.w_index, ops.w_index, 0.0});
  auto mats = SparseSymmetric::with_shared_pattern(edges.size() + 1, ch);
  ops.curlcurl = std::move(mats[0]);
  ops.mass = std::move(mats[1]);
  return ops;
}

std::vector<double> step2_source(const Mesh& mesh, const MaterialTable& materials, const EdgeDofSystem& edges,
                                 std::span<const double> phi) {
  std::vector<double> b(edges.size() + 1, 0.0);
  const auto& q = tet_quadrature();
  std::array<EdgeDofSystem::Term, 2> t;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double sigma = materials[mesh.cell_material[c]].sigma;
    if (sigma == 0.0) continue;
    const TetGeometry g = tet_geometry(mesh, c);
    const Vec3 field = -sigma * nodal_gradient(mesh, g, c, phi);
    for (int e = 0; e < 6; ++e) {
      double f = 0.0;
      for (int k = 0; k < 4; ++k) f += q.weights[k] * field.dot(edge_basis(g, e, q.points[k]));
      f *= g.volume * mesh.edge_sign(c, e);
      const int n = edges.terms(mesh, mesh.tet_edges[c][e], t);
      for (int i = 0; i < n; ++i) b[t[i].dof] += t[i].coeff * f;
    }
  }
  return b;
}

TimeScheme TimeScheme::backward_euler(double dt, std::span<const double> prev) {
  TimeScheme s;
  s.coeff = 1.0 / dt;
  s.history.resize(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) s.history[i] = prev[i] / dt;
  return s;
}

TimeScheme TimeScheme::bdf2(double dt, std::span<const double> prev, std::span<const double> prev2) {
  if (prev.size() != prev2.size()) throw std::invalid_argument("BDF2: history size mismatch");
  TimeScheme s;
  s.coeff = 1.5 / dt;
  s.history.resize(prev.size());
  for (std::size_t i = 0; i < prev.size(); ++i) s.history[i] = (4.0 * prev[i] - prev2[i]) / (2.0 * dt);
  return s;
}

std::vector<double> TimeScheme::derivative(std::span<const double> current) const {
  std::vector<double> d(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) d[i] = coeff * current[i] - history[i];
  return d;
}

Step2System assemble_step2(const Step2Operators& ops, std::span<const double> source, const TimeScheme& scheme) {
  const int n = ops.curlcurl.dimension();
  if (static_cast<int>(source.size()) != n || static_cast<int>(scheme.history.size()) != n)
    throw std::invalid_argument("step 2: source/history size does not match the operators");
  Step2System sys;
  sys.matrix = ops.curlcurl.axpby(1.0, ops.mass, scheme.coeff);
  sys.rhs = ops.mass.multiply(scheme.history);
  for (int i = 0; i < n; ++i) sys.rhs[i] += source[i];
  return sys;
}

// ---------------------------------------------------------------------------
// Port flux

double port_flux(const Mesh& mesh, const CellField& field, BoundaryTag port, int points) {
  if (port != BoundaryTag::Port1 && port != BoundaryTag::Port2 && port != BoundaryTag::Lateral)
    throw std::invalid_argument("port_flux: unknown port tag");
  if (points != 1 && points != 3) throw std::invalid_argument("port_flux: 1 or 3 points per face");
  double flux = 0.0;
  for (std::size_t i = 0; i < mesh.boundary_faces.size(); ++i) {
    if (mesh.boundary_tag[i] != port) continue;
    const Face& face = mesh.faces[mesh.boundary_faces[i]];
    const int c = face.cells[0];
    std::array<int, 3> loc{};
    int opposite = 0;
    for (int l = 0, k = 0; l < 4; ++l) {
      const int n = mesh.tets[c][l];
      if (n == face.nodes[0] || n == face.nodes[1] || n == face.nodes[2]) loc[k++] = l;
      else opposite = l;
    }
    const Vec3& p0 = mesh.nodes[mesh.tets[c][loc[0]]];
    Vec3 area = 0.5 * (mesh.nodes[mesh.tets[c][loc[1]]] - p0).cross(mesh.nodes[mesh.tets[c][loc[2]]] - p0);
    if (area.dot(mesh.nodes[mesh.tets[c][opposite]] - p0) > 0.0) area = -area;
    if (points == 1) {
      Vec4 b = Vec4::Zero();
      for (int l : loc) b[l] = 1.0 / 3.0;
      flux += field(c, b).dot(area);
    } else {
      for (int k = 0; k < 3; ++k) {
        Vec4 b = Vec4::Zero();
        b[loc[k]] = 0.5;
        b[loc[(k + 1) % 3]] = 0.5;
        flux += field(c, b).dot(area) / 3.0;
      }
    }
  }
  return flux;
}

}  // namespace twostep
