#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "twostep/discretization.hpp"
#include "twostep/geometry.hpp"
#include "twostep/sparse.hpp"

namespace twostep {

/// I1(t) = I0 cos(omega t + pi).  With frequency 0 the excitation is the
/// constant -I0 and the run length is given by `duration` and `steps`.
struct ExcitationSpec {
  double amplitude = 1000.0;  // I0 (A)
  double frequency = 50.0;    // Hz
  int periods = 7;
  int steps_per_period = 50;
  double duration = 0.0;  // s, only when frequency == 0
  int steps = 0;          // only when frequency == 0

  double omega() const;
  double period() const;
  double end_time() const;
  int total_steps() const;
  double dt() const;
  double current(double t) const;
  void validate() const;

  bool operator==(const ExcitationSpec&) const = default;
};

enum class Step2Method {
  FactorizedCG,  // CG preconditioned by a slightly shifted Cholesky factor
  IterativeCG,   // CG with the builtin preconditioner in `options`
};

struct SolverSettings {
  SolveOptions options;
  Step2Method step2 = Step2Method::FactorizedCG;
  double shift = 1e-8;

  bool operator==(const SolverSettings& o) const {
    return options.tol == o.options.tol && options.max_iter == o.options.max_iter &&
           options.precond == o.options.precond && step2 == o.step2 && shift == o.shift;
  }
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double I1 = 0.0;
  double I1_dc = 0.0;
  double I1_ec = 0.0;
  double I2_dc = 0.0;
  double V1_dc = 0.0;
  double V1_ec = 0.0;
  double W1 = 0.0;
  double U_sum = 0.0;
  double P_ohm = 0.0;
  double P_mag = 0.0;
  double P_total = 0.0;
  std::optional<double> U_power;
  double kernel_projection = 0.0;
  SolveReport solve;
};

/// Mask rule for the power-based voltage: P/I1 unless |I1| < 0.05 I0.
std::optional<double> reconstruct_voltage(double P_total, double I1, double I0);

/// d/dt of a scalar history with the same formula as the field scheme:
/// backward Euler when `prev2` is absent, BDF2 otherwise.
double v_ec(double current, double prev, std::optional<double> prev2, double dt);

struct PowerSplit {
  double ohm = 0.0;
  double mag = 0.0;
  double total() const { return ohm + mag; }
};

/// Sequential DC-conduction / eddy-current-correction time stepper.
class TwoStepSolver {
 public:
  TwoStepSolver(const Mesh& mesh, const MaterialTable& materials, ExcitationSpec excitation,
                SolverSettings settings = {}, std::optional<std::vector<double>> phi1 = std::nullopt);
  ~TwoStepSolver();
  TwoStepSolver(const TwoStepSolver&) = delete;
  TwoStepSolver& operator=(const TwoStepSolver&) = delete;

  struct DcSolution {
    std::vector<double> phi;  // full nodal vector
    double v1 = 0.0;
    SolveReport report;
  };
  /// Step-1 field for port current I1 (scaled from the cached unit solution).
  DcSolution dc_step(double I1) const;
  /// Step-1 field solved from scratch, bypassing the cache.
  DcSolution dc_solve(double I1) const;

  /// Advances one time step and returns its record.
  StepRecord advance();
  /// Runs the full interval; `on_step` sees the solver after every step.
  std::vector<StepRecord> run(const std::function<void(const TwoStepSolver&, const StepRecord&)>& on_step = {});

  // State after the latest step.
  int step() const { return step_; }
  double time() const { return step_ * excitation_.dt(); }
  double current() const { return excitation_.current(time()); }
  const std::vector<double>& phi() const { return phi_; }
  double v1_dc() const { return v1_dc_; }
  /// Constrained unknowns (A-tilde dofs, W1) and their discrete time derivative.
  const std::vector<double>& unknowns() const { return x_; }
  const std::vector<double>& unknowns_rate() const { return dx_; }
  double w1() const { return x_.empty() ? 0.0 : x_.back(); }
  /// Full edge vectors of A-tilde and of d/dt A-tilde.
  const std::vector<double>& a_edges() const { return a_full_; }
  const std::vector<double>& a_rate_edges() const { return da_full_; }
  double w1_rate() const { return dx_.empty() ? 0.0 : dx_.back(); }

  PowerSplit powers() const;

  /// Pointwise fields on a cell at barycentric coordinates.
  Vec3 electric_field(int cell, const Vec4& bary) const;
  Vec3 current_density(int cell, const Vec4& bary) const;
  /// -sigma grad(phi) and -sigma d/dt(A) parts of j (the latter is zero in the static region).
  Vec3 dc_current_density(int cell) const;
  Vec3 ec_current_density(int cell, const Vec4& bary) const;
  Vec3 flux_density(int cell) const;
  Vec3 magnetic_field(int cell) const;

  /// Size of the component of A-tilde along the discrete kernel, measured as
  /// the norm of G' D x on nodes whose cells carry no mass (D = diag of the
  /// step-2 matrix).
  double kernel_projection() const;

  const Mesh& mesh() const { return mesh_; }
  const MaterialTable& materials() const { return materials_; }
  const ExcitationSpec& excitation() const { return excitation_; }
  const NodalDofSystem& nodal() const { return nodal_; }
  const EdgeDofSystem& edge_dofs() const { return edges_; }
  const Step2Operators& operators() const { return ops_; }
  const Step1System& step1_unit_system() const { return step1_; }
  /// Step-2 system of the latest step (matrix shared with the cache).
  Step2System step2_system(const TimeScheme& scheme, double I1) const;
  const std::vector<double>& unit_source() const { return source_unit_; }

 private:
  const Mesh& mesh_;
  const MaterialTable& materials_;
  ExcitationSpec excitation_;
  SolverSettings settings_;
  NodalDofSystem nodal_;
  EdgeDofSystem edges_;
  Step1System step1_;
  Step2Operators ops_;

  std::vector<double> phi_unit_;
  double v1_unit_ = 0.0;
  SolveReport unit_report_;
  std::vector<double> source_unit_;

  std::optional<SparseSymmetric> be_matrix_, bdf2_matrix_;
  void build_preconditioner(double dt);

  std::unique_ptr<SpdFactorization> factor_;
  std::vector<char> kernel_node_;
  // Nodal problem G_K' D G_K used to strip kernel noise from preconditioned vectors.
  std::vector<int> kernel_index_;
  std::unique_ptr<SpdFactorization> kernel_factor_;
  std::vector<double> precond_diag_;
  PreconditionerHook precond_;

  int step_ = 0;
  std::vector<double> phi_;
  double v1_dc_ = 0.0;
  std::vector<double> x_, x_prev_, dx_;
  std::vector<double> a_full_, da_full_;
};

}  // namespace twostep
