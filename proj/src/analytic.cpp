#include "twostep/analytic.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace twostep {

namespace {

using ComplexL = std::complex<long double>;

// sum_m (-1)^m (z/2)^(2m+order) / (m! (m+order)!)
Complex bessel_series(Complex z, int order) {
  if (!(std::abs(z) <= kBesselMaxArgument))
    throw BesselDomainError("Bessel series: |z| = " + std::to_string(std::abs(z)) + " exceeds 30");
  const ComplexL half = ComplexL(z) / 2.0L;
  const ComplexL q = -half * half;
  ComplexL term = order == 0 ? ComplexL(1.0L) : half;
  ComplexL sum = term;
  for (int m = 1; m < 120; ++m) {
    term *= q / static_cast<long double>(m * (m + order));
    sum += term;
    if (std::abs(term) < 1e-16L * std::abs(sum)) break;
  }
  return Complex(static_cast<double>(sum.real()), static_cast<double>(sum.imag()));
}

}  // namespace

Complex bessel_J0(Complex z) { return bessel_series(z, 0); }
Complex bessel_J1(Complex z) { return bessel_series(z, 1); }

double skin_depth(double mu, double sigma, double omega) {
  if (!(mu > 0.0 && sigma > 0.0 && omega > 0.0))
    throw std::invalid_argument("skin_depth: mu, sigma and omega must be positive");
  return std::sqrt(2.0 / (mu * sigma * omega));
}

EddyCylinderSolution::EddyCylinderSolution(double radius, double mu, double sigma, double omega,
                                           Complex current, double mu_outside)
    : R_(radius), mu_(mu), sigma_(sigma), omega_(omega), mu_out_(mu_outside), I_(current) {
  if (!(radius > 0.0)) throw std::invalid_argument("eddy cylinder: radius must be positive");
  if (!(mu_outside > 0.0)) throw std::invalid_argument("eddy cylinder: outer permeability must be positive");
  delta_ = twostep::skin_depth(mu, sigma, omega);
  k_ = Complex(1.0, -1.0) / delta_;
  J1kR_ = bessel_J1(k_ * R_);
  if (std::abs(J1kR_) < 1e-300) throw std::invalid_argument("eddy cylinder: J1(kR) vanishes");
}

RadialFields EddyCylinderSolution::fields(double r) const {
  if (!(r >= 0.0)) throw std::invalid_argument("eddy cylinder: negative radius");
  const double two_pi_R = 2.0 * std::numbers::pi * R_;
  if (r <= R_)
    return {k_ * I_ / two_pi_R * bessel_J0(k_ * r) / J1kR_, I_ * mu_ / two_pi_R * bessel_J1(k_ * r) / J1kR_};
  return {0.0, I_ * mu_out_ / (2.0 * std::numbers::pi * r)};
}

StaticCylinderSolution::StaticCylinderSolution(double radius, double mu_inside, double mu_outside,
                                               double current)
    : R_(radius), mu_in_(mu_inside), mu_out_(mu_outside), I_(current) {
  if (!(radius > 0.0)) throw std::invalid_argument("static cylinder: radius must be positive");
}

RadialFields StaticCylinderSolution::fields(double r) const {
  if (!(r >= 0.0)) throw std::invalid_argument("static cylinder: negative radius");
  const double pi = std::numbers::pi;
  if (r <= R_) return {I_ / (pi * R_ * R_), mu_in_ * I_ * r / (2.0 * pi * R_ * R_)};
  return {0.0, mu_out_ * I_ / (2.0 * pi * r)};
}

double time_sample(Complex phasor, double omega, double t) {
  return (phasor * std::exp(Complex(0.0, omega * t))).real();
}

}  // namespace twostep
