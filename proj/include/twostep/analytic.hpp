#pragma once

#include <complex>
#include <stdexcept>

namespace twostep {

using Complex = std::complex<double>;

/// Thrown when a Bessel argument leaves the series envelope |z| <= 30.
class BesselDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kBesselMaxArgument = 30.0;

/// Power series of J_0 / J_1, summed in extended precision.
Complex bessel_J0(Complex z);
Complex bessel_J1(Complex z);

/// sqrt(2 / (mu sigma omega)).
double skin_depth(double mu, double sigma, double omega);

/// Radial phasor profile: j is axial, B azimuthal.
struct RadialFields {
  Complex j;
  Complex B;
};

/// Sinusoidal current I (phasor) in an infinite round conductor.
class EddyCylinderSolution {
 public:
  EddyCylinderSolution(double radius, double mu, double sigma, double omega, Complex current,
                       double mu_outside);

  RadialFields fields(double r) const;

  double radius() const { return R_; }
  double omega() const { return omega_; }
  double skin_depth() const { return delta_; }
  Complex wave_number() const { return k_; }
  Complex current() const { return I_; }

 private:
  double R_, mu_, sigma_, omega_, mu_out_;
  Complex I_;
  double delta_;
  Complex k_;
  Complex J1kR_;
};

/// Direct current I in an infinite round conductor.
class StaticCylinderSolution {
 public:
  StaticCylinderSolution(double radius, double mu_inside, double mu_outside, double current);

  /// Real profile, returned with zero imaginary parts.
  RadialFields fields(double r) const;
  double radius() const { return R_; }

 private:
  double R_, mu_in_, mu_out_, I_;
};

inline RadialFields eddy_fields(const EddyCylinderSolution& s, double r) { return s.fields(r); }
inline RadialFields static_fields(const StaticCylinderSolution& s, double r) { return s.fields(r); }

/// Re(phasor * exp(i omega t)).
double time_sample(Complex phasor, double omega, double t);

}  // namespace twostep
