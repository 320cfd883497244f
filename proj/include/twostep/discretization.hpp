#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "twostep/geometry.hpp"
#include "twostep/sparse.hpp"

namespace twostep {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Volume and constant barycentric gradients of a tetrahedron.
struct TetGeometry {
  std::array<Vec3, 4> vertices;
  std::array<Vec3, 4> grad;
  double volume = 0.0;

  Vec3 point(const Vec4& bary) const {
    return bary[0] * vertices[0] + bary[1] * vertices[1] + bary[2] * vertices[2] + bary[3] * vertices[3];
  }
};

/// Throws std::invalid_argument for non-positive volume.
TetGeometry tet_geometry(const std::array<Vec3, 4>& vertices);
TetGeometry tet_geometry(const Mesh& mesh, int cell);

/// Quadratic-exact 4-point rule: barycentric points, weights sum to 1.
struct TetQuadrature {
  std::array<Vec4, 4> points;
  std::array<double, 4> weights;
};
const TetQuadrature& tet_quadrature();

/// Lowest-order edge function of local edge e = (a, b):
/// w = l_a grad l_b - l_b grad l_a, oriented from local node a to b.
Vec3 edge_basis(const TetGeometry& g, int e, const Vec4& bary);
/// curl w = 2 grad l_a x grad l_b (constant).
Vec3 edge_curl(const TetGeometry& g, int e);

Mat4 elem_p1_stiffness(const TetGeometry& g, double sigma);
Mat6 elem_edge_mass(const TetGeometry& g, double sigma);
Mat6 elem_curlcurl(const TetGeometry& g, double nu);

// ---------------------------------------------------------------------------
// Constrained spaces

/// Nodal unknowns vanishing on both ports, plus the port indicators.  Nodes
/// touching no conducting cell carry no equation and are left out.
struct NodalDofSystem {
  std::vector<int> free_index;  // per node, -1 when not free
  int num_free = 0;
  std::vector<double> phi1;  // 1 on port-1 nodes by default
  std::vector<double> phi2;

  static NodalDofSystem build(const Mesh& mesh, const MaterialTable& materials);
  /// Replace the port-1 indicator; traces on both ports must stay 1 / 0.
  void set_phi1(const Mesh& mesh, std::vector<double> values);

  /// phi = phi_tilde + v1 * Phi1 as a full nodal vector.
  std::vector<double> compose(std::span<const double> free_values, double v1) const;
};

/// Edge unknowns realizing n x A = n x grad(eta) on the boundary, with eta = 0
/// on the ports: interior edges carry circulations, boundary edges are
/// eliminated in favour of eta at non-port boundary nodes.
struct EdgeDofSystem {
  struct Term {
    int dof;
    double coeff;
  };
  std::vector<int> interior_dof;  // per edge, -1 on boundary edges
  std::vector<int> eta_dof;       // per node, -1 unless a non-port boundary node
  int num_interior = 0;
  int num_eta = 0;

  static EdgeDofSystem build(const Mesh& mesh);
  int size() const { return num_interior + num_eta; }

  /// Global edge coefficient as a combination of constrained unknowns (0-2 terms).
  int terms(const Mesh& mesh, int edge, std::array<Term, 2>& out) const;
  /// C x: full edge-coefficient vector of a constrained vector.
  std::vector<double> expand(const Mesh& mesh, std::span<const double> x) const;
  /// Constrained representation of grad v for nodal v vanishing on the ports.
  std::vector<double> from_gradient(const Mesh& mesh, std::span<const double> nodal) const;
  /// Transpose of `from_gradient`: nodal vector G_c' r (zero on port nodes).
  std::vector<double> gradient_transpose(const Mesh& mesh, std::span<const double> r) const;
};

/// G v: edge coefficients v(hi) - v(lo).
std::vector<double> gradient(const Mesh& mesh, std::span<const double> nodal);

// ---------------------------------------------------------------------------
// Assembled systems

/// Unknowns (phi_tilde free dofs, V1).  The last index is V1.
struct Step1System {
  SparseSymmetric matrix;
  std::vector<double> rhs;
  int v1_index = 0;
};

Step1System assemble_step1(const Mesh& mesh, const MaterialTable& materials,
                           const NodalDofSystem& nodal, double I1);
/// Global P1 stiffness sigma * grad.grad over all nodes (for diagnostics).
SparseSymmetric assemble_nodal_stiffness(const Mesh& mesh, const MaterialTable& materials);

/// Time-independent operators over (constrained A-tilde, W1); W1 is last.
struct Step2Operators {
  SparseSymmetric curlcurl;  // nu curl.curl over the whole domain
  SparseSymmetric mass;      // sigma mass over the eddy region incl. W1 couplings
  std::vector<double> grad_phi1;  // G Phi1, full edge vector
  int w_index = 0;
};

Step2Operators assemble_step2_operators(const Mesh& mesh, const MaterialTable& materials,
                                        const EdgeDofSystem& edges, const NodalDofSystem& nodal);

/// Load (-sigma grad phi, A')_Omega; zero in the W1 slot.
std::vector<double> step2_source(const Mesh& mesh, const MaterialTable& materials,
                                 const EdgeDofSystem& edges, std::span<const double> phi);

/// d/dt X ~ coeff * X^n - history: backward Euler coeff = 1/dt, history =
/// X^{n-1}/dt; BDF2 coeff = 3/(2 dt), history = (4 X^{n-1} - X^{n-2})/(2 dt).
struct TimeScheme {
  double coeff = 0.0;
  std::vector<double> history;

  static TimeScheme backward_euler(double dt, std::span<const double> prev);
  static TimeScheme bdf2(double dt, std::span<const double> prev, std::span<const double> prev2);
  std::vector<double> derivative(std::span<const double> current) const;
};

struct Step2System {
  SparseSymmetric matrix;
  std::vector<double> rhs;
};

/// matrix = curlcurl + coeff * mass;  rhs = source + mass * history.
Step2System assemble_step2(const Step2Operators& ops, std::span<const double> source,
                           const TimeScheme& scheme);

// ---------------------------------------------------------------------------
// Port currents

/// Vector field on a cell evaluated at barycentric coordinates.
using CellField = std::function<Vec3(int cell, const Vec4& bary)>;

/// Outward flux of `field` through all faces with the given port tag,
/// using `points` = 1 (centroid) or 3 (edge-midpoint rule) per triangle.
double port_flux(const Mesh& mesh, const CellField& field, BoundaryTag port, int points = 1);

/// Evaluation helpers for full edge-coefficient vectors.
Vec3 edge_field(const Mesh& mesh, const TetGeometry& g, int cell, std::span<const double> coeffs,
                const Vec4& bary);
Vec3 edge_field_curl(const Mesh& mesh, const TetGeometry& g, int cell, std::span<const double> coeffs);
Vec3 nodal_gradient(const Mesh& mesh, const TetGeometry& g, int cell, std::span<const double> nodal);

}  // namespace twostep
