#include "twostep/driver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace twostep {

// ---------------------------------------------------------------------------
// Excitation

double ExcitationSpec::omega() const { return 2.0 * std::numbers::pi * frequency; }

double ExcitationSpec::period() const {
  if (frequency == 0.0) throw std::logic_error("constant excitation has no period");
  return 1.0 / frequency;
}

double ExcitationSpec::end_time() const { return frequency == 0.0 ? duration : periods * period(); }

int ExcitationSpec::total_steps() const { return frequency == 0.0 ? steps : periods * steps_per_period; }

double ExcitationSpec::dt() const { return end_time() / total_steps(); }

double ExcitationSpec::current(double t) const { return amplitude * std::cos(omega() * t + std::numbers::pi); }

void ExcitationSpec::validate() const {
  if (!std::isfinite(amplitude)) throw std::invalid_argument("excitation: amplitude must be finite");
  if (!(frequency >= 0.0)) throw std::invalid_argument("excitation: frequency must be >= 0");
  if (frequency == 0.0) {
    if (!(duration > 0.0)) throw std::invalid_argument("excitation: constant current needs duration > 0");
    if (steps < 1) throw std::invalid_argument("excitation: constant current needs steps >= 1");
  } else {
    if (periods < 1) throw std::invalid_argument("excitation: periods must be >= 1");
    if (steps_per_period < 1) throw std::invalid_argument("excitation: steps_per_period must be >= 1");
  }
}

std::optional<double> reconstruct_voltage(double P_total, double I1, double I0) {
  if (std::abs(I1) < 0.05 * std::abs(I0) || I1 == 0.0) return std::nullopt;
  return P_total / I1;
}

double v_ec(double current, double prev, std::optional<double> prev2, double dt) {
  if (!prev2) return (current - prev) / dt;
  return (3.0 * current - 4.0 * prev + *prev2) / (2.0 * dt);
}

// ---------------------------------------------------------------------------
// Solver

TwoStepSolver::TwoStepSolver(const Mesh& mesh, const MaterialTable& materials, ExcitationSpec excitation,
                             SolverSettings settings, std::optional<std::vector<double>> phi1)
    : mesh_(mesh), materials_(materials), excitation_(excitation), settings_(std::move(settings)) {
  excitation_.validate();
  if (!(settings_.options.tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
  nodal_ = NodalDofSystem::build(mesh_, materials_);
  if (phi1) nodal_.set_phi1(mesh_, std::move(*phi1));
  edges_ = EdgeDofSystem::build(mesh_);

  step1_ = assemble_step1(mesh_, materials_, nodal_, 1.0);
  SolveResult unit;
  try {
    unit = direct_spd_solve(step1_.matrix, step1_.rhs);
  } catch (const SolverError& e) {
    throw SolverError(std::string("DC conduction system: ") + e.what() + " (is there a conductive path?)",
                      e.report());
  }
  unit_report_ = unit.report;
  v1_unit_ = unit.x[step1_.v1_index];
  phi_unit_ = nodal_.compose(unit.x, v1_unit_);

  ops_ = assemble_step2_operators(mesh_, materials_, edges_, nodal_);
  source_unit_ = step2_source(mesh_, materials_, edges_, phi_unit_);

  std::vector<char> massive(mesh_.num_nodes(), 0);
  for (int c = 0; c < mesh_.num_cells(); ++c)
    if (mesh_.in_eddy_region(c) && materials_[mesh_.cell_material[c]].sigma > 0.0)
      for (int n : mesh_.tets[c]) massive[n] = 1;
  kernel_node_.assign(mesh_.num_nodes(), 0);
  for (int n = 0; n < mesh_.num_nodes(); ++n) kernel_node_[n] = !massive[n] && mesh_.node_port[n] == 0;

  const std::size_t n = ops_.curlcurl.dimension();
  x_.assign(n, 0.0);
  x_prev_.assign(n, 0.0);
  dx_.assign(n, 0.0);
  phi_.assign(mesh_.num_nodes(), 0.0);
  a_full_.assign(mesh_.num_edges(), 0.0);
  da_full_.assign(mesh_.num_edges(), 0.0);
}

TwoStepSolver::~TwoStepSolver() = default;

TwoStepSolver::DcSolution TwoStepSolver::dc_step(double I1) const {
  DcSolution s;
  s.phi.resize(phi_unit_.size());
  for (std::size_t i = 0; i < phi_unit_.size(); ++i) s.phi[i] = I1 * phi_unit_[i];
  s.v1 = I1 * v1_unit_;
  s.report = unit_report_;
  return s;
}

TwoStepSolver::DcSolution TwoStepSolver::dc_solve(double I1) const {
  const Step1System sys = assemble_step1(mesh_, materials_, nodal_, I1);
  SolveResult r = direct_spd_solve(sys.matrix, sys.rhs);
  DcSolution s;
  s.v1 = r.x[sys.v1_index];
  s.phi = nodal_.compose(r.x, s.v1);
  s.report = r.report;
  return s;
}

Step2System TwoStepSolver::step2_system(const TimeScheme& scheme, double I1) const {
  std::vector<double> f(source_unit_.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = I1 * source_unit_[i];
  return assemble_step2(ops_, f, scheme);
}

void TwoStepSolver::build_preconditioner(double dt) {
  if (!bdf2_matrix_) bdf2_matrix_ = ops_.curlcurl.axpby(1.0, ops_.mass, 1.5 / dt);
  factor_ = std::make_unique<SpdFactorization>(*bdf2_matrix_, settings_.shift);
  precond_diag_ = bdf2_matrix_->diagonal();

  kernel_index_.assign(mesh_.num_nodes(), -1);
  int nk = 0;
  for (int n = 0; n < mesh_.num_nodes(); ++n)
    if (kernel_node_[n]) kernel_index_[n] = nk++;
  if (nk > 0) {
    std::vector<Triplet> trip;
    for (int e = 0; e < mesh_.num_edges(); ++e) {
      const int d = edges_.interior_dof[e];
      if (d < 0) continue;
      const int a = kernel_index_[mesh_.edges[e][0]], b = kernel_index_[mesh_.edges[e][1]];
      const double w = precond_diag_[d];
      if (a >= 0) trip.push_back({a, a, w});
      if (b >= 0) trip.push_back({b, b, w});
      if (a >= 0 && b >= 0) trip.push_back({std::max(a, b), std::min(a, b), -w});
    }
    for (int n = 0; n < mesh_.num_nodes(); ++n)
      if (kernel_index_[n] >= 0 && edges_.eta_dof[n] >= 0)
        trip.push_back({kernel_index_[n], kernel_index_[n], precond_diag_[edges_.eta_dof[n]]});
    kernel_factor_ = std::make_unique<SpdFactorization>(SparseSymmetric::from_lower_triplets(nk, trip));
  }

  precond_ = [this, nk](std::span<const double> r, std::span<double> z) {
    const std::vector<double> y = factor_->solve(r);
    std::copy(y.begin(), y.end(), z.begin());
    if (nk == 0) return;
    // z -= G_K (G_K' D G_K)^{-1} G_K' D z
    std::vector<double> dz(edges_.size());
    for (int i = 0; i < edges_.size(); ++i) dz[i] = precond_diag_[i] * z[i];
    const std::vector<double> g = edges_.gradient_transpose(mesh_, dz);
    std::vector<double> gk(nk);
    for (int n = 0; n < mesh_.num_nodes(); ++n)
      if (kernel_index_[n] >= 0) gk[kernel_index_[n]] = g[n];
    const std::vector<double> c = kernel_factor_->solve(gk);
    std::vector<double> v(mesh_.num_nodes(), 0.0);
    for (int n = 0; n < mesh_.num_nodes(); ++n)
      if (kernel_index_[n] >= 0) v[n] = c[kernel_index_[n]];
    const std::vector<double> gv = edges_.from_gradient(mesh_, v);
    for (int i = 0; i < edges_.size(); ++i) z[i] -= gv[i];
  };
}

StepRecord TwoStepSolver::advance() {
  if (step_ >= excitation_.total_steps()) throw std::logic_error("time loop already finished");
  const int n = step_ + 1;
  const double dt = excitation_.dt();
  const double t = n * dt;
  const double I1 = excitation_.current(t);

  const bool bdf2 = n >= 2;
  TimeScheme scheme = bdf2 ? TimeScheme::bdf2(dt, x_, x_prev_) : TimeScheme::backward_euler(dt, x_);
  auto& cached = bdf2 ? bdf2_matrix_ : be_matrix_;
  if (!cached) cached = ops_.curlcurl.axpby(1.0, ops_.mass, scheme.coeff);
  if (settings_.step2 == Step2Method::FactorizedCG && !settings_.options.hook && !precond_) build_preconditioner(dt);

  Step2System sys;
  sys.rhs = ops_.mass.multiply(scheme.history);
  for (std::size_t i = 0; i < sys.rhs.size(); ++i) sys.rhs[i] += I1 * source_unit_[i];

  SolveResult res;
  try {
    const std::vector<double> x0(sys.rhs.size(), 0.0);
    SolveOptions opts = settings_.options;
    if (settings_.step2 == Step2Method::FactorizedCG && !opts.hook) opts.hook = precond_;
    res = cg_solve(*cached, sys.rhs, x0, opts);
  } catch (const SolverError& e) {
    std::ostringstream msg;
    msg << "step " << n << " (t = " << t << " s): " << e.what();
    throw SolverError(msg.str(), e.report());
  }

  const DcSolution dc = dc_step(I1);
  phi_ = dc.phi;
  v1_dc_ = dc.v1;
  x_prev_ = std::move(x_);
  x_ = std::move(res.x);
  dx_ = scheme.derivative(x_);
  a_full_ = edges_.expand(mesh_, x_);
  da_full_ = edges_.expand(mesh_, dx_);
  step_ = n;

  StepRecord r;
  r.step = n;
  r.t = t;
  r.I1 = I1;
  r.I1_dc = port_flux(mesh_, [this](int c, const Vec4&) { return dc_current_density(c); }, BoundaryTag::Port1, 1);
  r.I2_dc = port_flux(mesh_, [this](int c, const Vec4&) { return dc_current_density(c); }, BoundaryTag::Port2, 1);
  r.I1_ec = port_flux(mesh_, [this](int c, const Vec4& b) { return ec_current_density(c, b); }, BoundaryTag::Port1, 3);
  r.V1_dc = v1_dc_;
  r.V1_ec = dx_.back();
  r.W1 = x_.back();
  r.U_sum = -(r.V1_dc + r.V1_ec);
  const PowerSplit p = powers();
  r.P_ohm = p.ohm;
  r.P_mag = p.mag;
  r.P_total = p.total();
  r.U_power = reconstruct_voltage(r.P_total, I1, excitation_.amplitude);
  r.kernel_projection = kernel_projection();
  r.solve = res.report;
  return r;
}

std::vector<StepRecord> TwoStepSolver::run(
    const std::function<void(const TwoStepSolver&, const StepRecord&)>& on_step) {
  std::vector<StepRecord> records;
  records.reserve(excitation_.total_steps());
  while (step_ < excitation_.total_steps()) {
    records.push_back(advance());
    if (on_step) on_step(*this, records.back());
  }
  return records;
}

// ---------------------------------------------------------------------------
// Derived quantities

Vec3 TwoStepSolver::dc_current_density(int cell) const {
  const double sigma = materials_[mesh_.cell_material[cell]].sigma;
  if (sigma == 0.0) return Vec3::Zero();
  return -sigma * nodal_gradient(mesh_, tet_geometry(mesh_, cell), cell, phi_);
}

Vec3 TwoStepSolver::ec_current_density(int cell, const Vec4& bary) const {
  const double sigma = materials_[mesh_.cell_material[cell]].sigma;
  if (sigma == 0.0 || !mesh_.in_eddy_region(cell)) return Vec3::Zero();
  const TetGeometry g = tet_geometry(mesh_, cell);
  const Vec3 rate = edge_field(mesh_, g, cell, da_full_, bary) + w1_rate() * nodal_gradient(mesh_, g, cell, nodal_.phi1);
  return -sigma * rate;
}

Vec3 TwoStepSolver::electric_field(int cell, const Vec4& bary) const {
  const TetGeometry g = tet_geometry(mesh_, cell);
  Vec3 e = -nodal_gradient(mesh_, g, cell, phi_);
  if (mesh_.in_eddy_region(cell))
    e -= edge_field(mesh_, g, cell, da_full_, bary) + w1_rate() * nodal_gradient(mesh_, g, cell, nodal_.phi1);
  return e;
}

Vec3 TwoStepSolver::current_density(int cell, const Vec4& bary) const {
  const double sigma = materials_[mesh_.cell_material[cell]].sigma;
  if (sigma == 0.0) return Vec3::Zero();
  return sigma * electric_field(cell, bary);
}

Vec3 TwoStepSolver::flux_density(int cell) const {
  return edge_field_curl(mesh_, tet_geometry(mesh_, cell), cell, a_full_);
}

Vec3 TwoStepSolver::magnetic_field(int cell) const {
  return flux_density(cell) / materials_[mesh_.cell_material[cell]].mu();
}

PowerSplit TwoStepSolver::powers() const {
  PowerSplit p;
  const auto& q = tet_quadrature();
  for (int c = 0; c < mesh_.num_cells(); ++c) {
    const double sigma = materials_[mesh_.cell_material[c]].sigma;
    if (sigma == 0.0) continue;
    const TetGeometry g = tet_geometry(mesh_, c);
    const Vec3 grad_phi = nodal_gradient(mesh_, g, c, phi_);
    if (!mesh_.in_eddy_region(c)) {
      p.ohm += sigma * g.volume * grad_phi.squaredNorm();
      continue;
    }
    const Vec3 w_part = w1_rate() * nodal_gradient(mesh_, g, c, nodal_.phi1);
    double s = 0.0;
    for (int k = 0; k < 4; ++k)
      s += q.weights[k] * (grad_phi + edge_field(mesh_, g, c, da_full_, q.points[k]) + w_part).squaredNorm();
    p.ohm += sigma * g.volume * s;
  }
  p.mag = dot(x_, ops_.curlcurl.multiply(dx_));
  return p;
}

double TwoStepSolver::kernel_projection() const {
  if (!bdf2_matrix_ && !be_matrix_) return 0.0;
  const std::vector<double> d = (bdf2_matrix_ ? *bdf2_matrix_ : *be_matrix_).diagonal();
  std::vector<double> dx(edges_.size());
  for (int i = 0; i < edges_.size(); ++i) dx[i] = d[i] * x_[i];
  const std::vector<double> y = edges_.gradient_transpose(mesh_, dx);
  double s = 0.0;
  for (int n = 0; n < mesh_.num_nodes(); ++n)
    if (kernel_node_[n]) s += y[n] * y[n];
  return std::sqrt(s);
}

}  // namespace twostep
