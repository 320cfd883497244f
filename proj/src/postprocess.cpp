#include "twostep/postprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "twostep/vtk.hpp"

namespace twostep {

// ---------------------------------------------------------------------------
// Oracle

CylinderOracle CylinderOracle::eddy(const EddyCylinderSolution& s, double axial_sign) {
  return {[s](double r) { return s.fields(r); }, s.omega(), axial_sign};
}

CylinderOracle CylinderOracle::stationary(const StaticCylinderSolution& s, double axial_sign) {
  return {[s](double r) { return s.fields(r); }, 0.0, axial_sign};
}

Vec3 CylinderOracle::current_density(const Vec3& x, double t) const {
  const double r = std::hypot(x.x(), x.y());
  return Vec3(0.0, 0.0, axial_sign * time_sample(profile(r).j, omega, t));
}

Vec3 CylinderOracle::flux_density(const Vec3& x, double t) const {
  const double r = std::hypot(x.x(), x.y());
  if (r == 0.0) return Vec3::Zero();
  const double b = axial_sign * time_sample(profile(r).B, omega, t);
  return Vec3(-x.y() / r * b, x.x() / r * b, 0.0);
}

double ErrorSample::error() const { return std::sqrt(error_sq); }

double ErrorSample::relative() const {
  if (!(norm_sq > 0.0)) throw std::domain_error("relative error: reference norm is zero");
  return std::sqrt(error_sq / norm_sq);
}

// ---------------------------------------------------------------------------
// Volume norms

ErrorSample volume_error_L2(const Mesh& mesh, const CellField& j, const CylinderOracle& oracle, double t,
                            Region region) {
  const auto& q = tet_quadrature();
  ErrorSample s;
  bool any = false;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (region == Region::Conductor && mesh.cell_class[c] == DomainClass::Insulator) continue;
    any = true;
    const TetGeometry g = tet_geometry(mesh, c);
    for (int k = 0; k < 4; ++k) {
      const Vec3 ex = oracle.current_density(g.point(q.points[k]), t);
      const Vec3 jh = j(c, q.points[k]);
      s.error_sq += q.weights[k] * g.volume * (jh - ex).squaredNorm();
      s.norm_sq += q.weights[k] * g.volume * ex.squaredNorm();
    }
  }
  if (!any) throw std::invalid_argument("volume error: region is empty");
  return s;
}

ErrorSample curl_seminorm_error(const Mesh& mesh, const CellConstant& B, const CylinderOracle& oracle, double t,
                                Region region) {
  const auto& q = tet_quadrature();
  ErrorSample s;
  bool any = false;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (region == Region::Conductor && mesh.cell_class[c] == DomainClass::Insulator) continue;
    any = true;
    const TetGeometry g = tet_geometry(mesh, c);
    const Vec3 bh = B(c);
    for (int k = 0; k < 4; ++k) {
      const Vec3 ex = oracle.flux_density(g.point(q.points[k]), t);
      s.error_sq += q.weights[k] * g.volume * (bh - ex).squaredNorm();
      s.norm_sq += q.weights[k] * g.volume * ex.squaredNorm();
    }
  }
  if (!any) throw std::invalid_argument("curl error: region is empty");
  return s;
}

ErrorSample cross_section_error(const Mesh& mesh, const CellField& j, const CylinderOracle& oracle, double z,
                                double t) {
  const auto& planes = mesh.z_planes;
  const double tol = 1e-9 * (planes.back() - planes.front());
  int plane = -1;
  for (std::size_t k = 0; k < planes.size(); ++k)
    if (std::abs(planes[k] - z) <= tol) plane = static_cast<int>(k);
  if (plane < 0) throw std::invalid_argument("cross section: z is not a layer interface");
  const int layer = plane + 1 < static_cast<int>(planes.size()) ? plane : plane - 1;

  ErrorSample s;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    if (mesh.cell_layer[c] != layer || mesh.cell_class[c] == DomainClass::Insulator) continue;
    std::array<int, 3> loc{};
    int k = 0;
    for (int l = 0; l < 4; ++l)
      if (std::abs(mesh.nodes[mesh.tets[c][l]].z() - planes[plane]) <= tol) {
        if (k == 3) throw std::logic_error("cross section: flat tetrahedron");
        loc[k++] = l;
      }
    if (k != 3) continue;
    const Vec3& a = mesh.nodes[mesh.tets[c][loc[0]]];
    const Vec3& b = mesh.nodes[mesh.tets[c][loc[1]]];
    const Vec3& d = mesh.nodes[mesh.tets[c][loc[2]]];
    const double area = 0.5 * (b - a).cross(d - a).norm();
    for (int m = 0; m < 3; ++m) {
      Vec4 bary = Vec4::Zero();
      bary[loc[m]] = 0.5;
      bary[loc[(m + 1) % 3]] = 0.5;
      const Vec3 x = 0.5 * (mesh.nodes[mesh.tets[c][loc[m]]] + mesh.nodes[mesh.tets[c][loc[(m + 1) % 3]]]);
      const Vec3 ex = oracle.current_density(x, t);
      const Vec3 jh = j(c, bary);
      s.error_sq += area / 3.0 * (jh - ex).squaredNorm();
      s.norm_sq += area / 3.0 * ex.squaredNorm();
    }
  }
  return s;
}

ErrorSample volume_error_L2(const TwoStepSolver& solver, const CylinderOracle& oracle, double t, Region region) {
  return volume_error_L2(
      solver.mesh(), [&](int c, const Vec4& b) { return solver.current_density(c, b); }, oracle, t, region);
}

ErrorSample curl_seminorm_error(const TwoStepSolver& solver, const CylinderOracle& oracle, double t,
                                Region region) {
  return curl_seminorm_error(
      solver.mesh(), [&](int c) { return solver.flux_density(c); }, oracle, t, region);
}

ErrorSample cross_section_error(const TwoStepSolver& solver, const CylinderOracle& oracle, double z, double t) {
  return cross_section_error(
      solver.mesh(), [&](int c, const Vec4& b) { return solver.current_density(c, b); }, oracle, z, t);
}

// ---------------------------------------------------------------------------
// Time integration

namespace {

// Trapezoidal integral of f(v) over the final `period`; returns {integral, span}.
template <class F>
std::pair<double, double> last_period_integral(std::span<const double> t, std::span<const double> v,
                                               double period, F f) {
  if (t.size() != v.size()) throw std::invalid_argument("period integral: size mismatch");
  if (!(period > 0.0)) throw std::invalid_argument("period integral: period must be positive");
  if (t.size() < 2) throw std::invalid_argument("period integral: fewer samples than one period");
  const double t_end = t.back();
  const double t0 = t_end - period;
  const double tol = 1e-9 * period;
  if (t.front() > t0 + tol) throw std::invalid_argument("period integral: fewer samples than one period");
  std::size_t first = 0;
  while (t[first] < t0 - tol) ++first;
  if (std::abs(t[first] - t0) > tol) throw std::invalid_argument("period integral: period start is not a sample time");
  double s = 0.0;
  for (std::size_t i = first + 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f(v[i]) + f(v[i - 1]));
  return {s, t_end - t[first]};
}

}  // namespace

double period_integrated_error(std::span<const double> t, std::span<const double> e, double period) {
  return std::sqrt(last_period_integral(t, e, period, [](double x) { return x * x; }).first);
}

double period_average(std::span<const double> t, std::span<const double> e, double period) {
  const auto [s, span] = last_period_integral(t, e, period, [](double x) { return x; });
  return s / span;
}

double period_rms(std::span<const double> t, std::span<const double> v, double period) {
  const auto [s, span] = last_period_integral(t, v, period, [](double x) { return x * x; });
  return std::sqrt(s / span);
}

double normalized_voltage(double voltage, int layers) {
  if (layers < 1) throw std::invalid_argument("normalized voltage: layers must be >= 1");
  return voltage / layers;
}

double convergence_slope(std::span<const double> N, std::span<const double> e) {
  if (N.size() != e.size()) throw std::invalid_argument("convergence slope: size mismatch");
  if (N.size() < 3) throw std::invalid_argument("convergence slope: at least 3 points required");
  for (std::size_t i = 0; i < N.size(); ++i) {
    if (!(N[i] > 0.0 && e[i] > 0.0)) throw std::invalid_argument("convergence slope: values must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (N[i] == N[j]) throw std::invalid_argument("convergence slope: duplicate N");
  }
  const double n = static_cast<double>(N.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < N.size(); ++i) {
    const double x = std::log(N[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Files

void write_csv(std::ostream& out, std::span<const StepRecord> records) {
  out << kRecordHeader << '\n';
  out.precision(17);
  for (const auto& r : records) {
    out << r.t << ',' << r.I1 << ',' << r.I1_dc << ',' << r.I1_ec << ',' << r.V1_dc << ',' << r.V1_ec << ','
        << r.U_sum << ',' << r.P_ohm << ',' << r.P_mag << ',' << r.P_total << ',';
    if (r.U_power) out << *r.U_power;
    else out << "nan";
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const StepRecord> records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot open '" + path.string() + "' for writing");
  write_csv(out, records);
  if (!out) throw std::runtime_error("csv: write failed for '" + path.string() + "'");
}

std::vector<StepRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader)
    throw std::runtime_error("csv: unexpected header in '" + path.string() + "'");
  std::vector<StepRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell == "nan") {
        v.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double x = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw std::runtime_error("csv: bad number on line " + std::to_string(lineno));
      v.push_back(x);
    }
    if (v.size() != 11) throw std::runtime_error("csv: expected 11 columns on line " + std::to_string(lineno));
    StepRecord r;
    r.step = static_cast<int>(out.size()) + 1;
    r.t = v[0];
    r.I1 = v[1];
    r.I1_dc = v[2];
    r.I1_ec = v[3];
    r.V1_dc = v[4];
    r.V1_ec = v[5];
    r.U_sum = v[6];
    r.P_ohm = v[7];
    r.P_mag = v[8];
    r.P_total = v[9];
    if (!std::isnan(v[10])) r.U_power = v[10];
    out.push_back(r);
  }
  return out;
}

void write_vtk(const TwoStepSolver& solver, const std::filesystem::path& path) {
  const Mesh& mesh = solver.mesh();
  const int nc = mesh.num_cells();
  const Vec4 centre = Vec4::Constant(0.25);
  VtkCellData data;
  std::vector<Vec3> j(nc), B(nc);
  std::vector<double> sigma(nc);
  std::vector<int> region(nc);
  for (int c = 0; c < nc; ++c) {
    j[c] = solver.current_density(c, centre);
    B[c] = solver.flux_density(c);
    sigma[c] = solver.materials()[mesh.cell_material[c]].sigma;
    region[c] = static_cast<int>(mesh.cell_class[c]);
  }
  data.vectors.emplace_back("j", std::move(j));
  data.vectors.emplace_back("B", std::move(B));
  data.scalars.emplace_back("sigma", std::move(sigma));
  data.int_scalars.emplace_back("region", std::move(region));
  write_vtk_unstructured(mesh, data, path, "twostep t=" + std::to_string(solver.time()));
}

}  // namespace twostep
