#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twostep/analytic.hpp"
#include "twostep/driver.hpp"

namespace twostep {

/// Axisymmetric phasor oracle: axial current density and azimuthal flux
/// density as functions of the radius.  `axial_sign` orients the analytic
/// current along +z (1) or -z (-1).
struct CylinderOracle {
  std::function<RadialFields(double r)> profile;
  double omega = 0.0;
  double axial_sign = 1.0;

  static CylinderOracle eddy(const EddyCylinderSolution& s, double axial_sign);
  static CylinderOracle stationary(const StaticCylinderSolution& s, double axial_sign);

  Vec3 current_density(const Vec3& x, double t) const;
  Vec3 flux_density(const Vec3& x, double t) const;
};

/// Squared error and squared reference norm of one quantity at one instant.
struct ErrorSample {
  double error_sq = 0.0;
  double norm_sq = 0.0;
  double error() const;
  double relative() const;
};

enum class Region { Conductor, Everywhere };

/// L2 error of j_h against the oracle over the cells of `region`.
ErrorSample volume_error_L2(const TwoStepSolver& solver, const CylinderOracle& oracle, double t,
                            Region region = Region::Conductor);
/// L2 error of curl A_h against the oracle B.
ErrorSample curl_seminorm_error(const TwoStepSolver& solver, const CylinderOracle& oracle, double t,
                                Region region = Region::Everywhere);

/// L2 error of j_h over the conductor disk lying in the plane z, using the
/// cell layer above the plane (below it for the top port).
ErrorSample cross_section_error(const TwoStepSolver& solver, const CylinderOracle& oracle, double z, double t);

/// The same norms for arbitrary fields on a mesh.
using CellConstant = std::function<Vec3(int cell)>;
ErrorSample volume_error_L2(const Mesh& mesh, const CellField& j, const CylinderOracle& oracle, double t,
                            Region region = Region::Conductor);
ErrorSample curl_seminorm_error(const Mesh& mesh, const CellConstant& B, const CylinderOracle& oracle, double t,
                                Region region = Region::Everywhere);
ErrorSample cross_section_error(const Mesh& mesh, const CellField& j, const CylinderOracle& oracle, double z,
                                double t);

/// sqrt of the trapezoidal integral of e(t)^2 over the final `period` of the samples.
double period_integrated_error(std::span<const double> t, std::span<const double> e, double period);
/// Time average of e(t) over the final period (trapezoidal).
double period_average(std::span<const double> t, std::span<const double> e, double period);
/// Root mean square over the final period (trapezoidal).
double period_rms(std::span<const double> t, std::span<const double> v, double period);

double normalized_voltage(double voltage, int layers);

/// Least-squares slope of log(e) against log(N).
double convergence_slope(std::span<const double> N, std::span<const double> e);

inline constexpr const char* kRecordHeader = "t,I1,I1_dc,I1_ec,V1_dc,V1_ec,U_sum,P_ohm,P_mag,P_total,U_power";

void write_csv(std::ostream& out, std::span<const StepRecord> records);
void write_csv(const std::filesystem::path& path, std::span<const StepRecord> records);
/// Parses a file written by `write_csv`; masked voltages come back empty.
std::vector<StepRecord> read_csv(const std::filesystem::path& path);

/// Cell fields j, B (at centroids), sigma and region for the latest step.
void write_vtk(const TwoStepSolver& solver, const std::filesystem::path& path);

}  // namespace twostep
