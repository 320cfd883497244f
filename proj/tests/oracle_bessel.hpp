#pragma once

// 50-digit reference for J0 and J1, shared by the unit and acceptance tests.

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>
#include <complex>

namespace oracle {

using Real = boost::multiprecision::cpp_bin_float_50;
using Cx = boost::multiprecision::cpp_complex_50;

inline std::complex<double> bessel(std::complex<double> z, int order) {
  const Cx half = Cx(Real(z.real()), Real(z.imag())) / 2;
  const Cx q = -half * half;
  Cx term = order == 0 ? Cx(1) : half;
  Cx sum = term;
  for (int m = 1; m < 400; ++m) {
    term *= q / Real(m * (m + order));
    sum += term;
    if (abs(term) < Real("1e-45") * abs(sum)) break;
  }
  return {static_cast<double>(sum.real()), static_cast<double>(sum.imag())};
}

}  // namespace oracle
