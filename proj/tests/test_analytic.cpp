#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_complex.hpp>
#include <numbers>
#include <random>

#include "twostep/analytic.hpp"
#include "twostep/geometry.hpp"
#include "oracle_bessel.hpp"

using namespace twostep;

namespace {

const double kOmega = 2.0 * std::numbers::pi * 50.0;

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("Bessel values at known points") {
  CHECK(bessel_J0(0.0) == Complex(1.0, 0.0));
  CHECK(bessel_J1(0.0) == Complex(0.0, 0.0));
  CHECK(std::abs(bessel_J0(1.0).real() - 0.7651976865579666) <= 1e-12);
  const Complex z(2.0, 1.0);
  const double h = 1e-5;
  const Complex d = (bessel_J0(z + h) - bessel_J0(z - h)) / (2.0 * h);
  CHECK(rel(d, -bessel_J1(z)) < 1e-9);
  CHECK(std::abs(bessel_J1(1e-6) / 1e-6 - 0.5) < 1e-9);
  CHECK_THROWS_AS(bessel_J0(Complex(25.0, 20.0)), BesselDomainError);
  CHECK_NOTHROW(bessel_J1(Complex(0.0, 30.0)));
}

TEST_CASE("Bessel series agrees with the 50-digit oracle") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-15.0, 15.0);
  int n = 0;
  while (n < 200) {
    const Complex z(U(rng), U(rng));
    if (std::abs(z) > 15.0) continue;
    ++n;
    CHECK(rel(bessel_J0(z), oracle::bessel(z, 0)) < 1e-10);
    CHECK(rel(bessel_J1(z), oracle::bessel(z, 1)) < 1e-10);
  }
}

TEST_CASE("skin depth") {
  CHECK(skin_depth(1.0, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(skin_depth(1500 * kMu0, 1e7, kOmega) == doctest::Approx(5.8115e-4).epsilon(1e-4));
  CHECK(skin_depth(kMu0, 6e7, kOmega) == doctest::Approx(9.190e-3).epsilon(1e-3));
  CHECK_THROWS(skin_depth(0.0, 1.0, 1.0));
  CHECK_THROWS(skin_depth(1.0, -1.0, 1.0));
}

TEST_CASE("eddy cylinder: total current, H continuity, wave number") {
  const double R = 3e-3, mu = 1500 * kMu0, sigma = 1e7;
  const Complex I(-1000.0, 0.0);
  const EddyCylinderSolution s(R, mu, sigma, kOmega, I, kMu0);
  const Complex k = s.wave_number();
  CHECK(rel(k * k, Complex(0.0, -mu * sigma * kOmega)) < 1e-14);

  // composite Gauss-Legendre (5 points) on 400 panels
  const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
  const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                        0.2369268850561891};
  Complex total = 0.0;
  const int panels = 400;
  for (int p = 0; p < panels; ++p) {
    const double a = R * p / panels, b = R * (p + 1) / panels;
    for (int q = 0; q < 5; ++q) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
      total += 0.5 * (b - a) * gw[q] * s.fields(r).j * 2.0 * std::numbers::pi * r;
    }
  }
  CHECK(rel(total, I) < 1e-8);

  const Complex h_in = s.fields(R).B / mu;
  const Complex h_out = s.fields(R * (1 + 1e-15)).B / kMu0;
  const Complex h_exact = I / (2.0 * std::numbers::pi * R);
  CHECK(rel(h_in, h_exact) < 1e-12);
  CHECK(rel(h_out, h_exact) < 1e-12);
  CHECK(s.fields(2 * R).j == Complex(0.0, 0.0));
}

TEST_CASE("phasor profile solves the radial induction equation") {
  const double R = 3e-3, mu = 1500 * kMu0, sigma = 1e7;
  const EddyCylinderSolution s(R, mu, sigma, kOmega, Complex(1000.0, 0.0), kMu0);
  const double h = 1e-4 * R;
  for (double r : {0.3 * R, 0.6 * R, 0.9 * R}) {
    const Complex jm = s.fields(r - h).j, j0 = s.fields(r).j, jp = s.fields(r + h).j;
    const Complex lap = (jp - 2.0 * j0 + jm) / (h * h) + (jp - jm) / (2.0 * h * r);
    CHECK(rel(lap, Complex(0.0, kOmega * mu * sigma) * j0) < 1e-5);
  }
}

TEST_CASE("low-frequency limit approaches the static solution") {
  const double R = 3e-3, mu = 1500 * kMu0, sigma = 1e7;
  const EddyCylinderSolution slow(R, mu, sigma, kOmega * 1e-6, Complex(1000.0, 0.0), kMu0);
  const StaticCylinderSolution dc(R, mu, kMu0, 1000.0);
  for (int i = 0; i <= 40; ++i) {
    const double r = 2.0 * R * i / 40;
    const auto a = slow.fields(r), b = dc.fields(r);
    if (r <= R) CHECK(std::abs(a.j - b.j) <= 1e-4 * std::abs(b.j));
    if (r > 0.0) CHECK(std::abs(a.B - b.B) <= 1e-3 * std::abs(b.B));
  }
  CHECK(std::abs(slow.fields(0.0).j - dc.fields(0.0).j) <= 1e-4 * std::abs(dc.fields(0.0).j));
}

TEST_CASE("static cylinder") {
  const double R = 3e-3;
  const StaticCylinderSolution s(R, 1500 * kMu0, kMu0, 800.0);
  CHECK(s.fields(0.0).B == Complex(0.0, 0.0));
  CHECK(rel(s.fields(R).B / (1500 * kMu0), 800.0 / (2 * std::numbers::pi * R)) < 1e-15);
  CHECK(rel(s.fields(R * 1.0000001).B / kMu0, 800.0 / (2 * std::numbers::pi * R * 1.0000001)) < 1e-15);
  CHECK(s.fields(R).j.real() * std::numbers::pi * R * R == doctest::Approx(800.0).epsilon(1e-15));
  CHECK(s.fields(1.5 * R).j == Complex(0.0, 0.0));
}

TEST_CASE("time sampling") {
  CHECK(time_sample(1.0, kOmega, 0.0) == 1.0);
  const double half = std::numbers::pi / kOmega;
  CHECK(time_sample(-1000.0, kOmega, half) == doctest::Approx(1000.0).epsilon(1e-14));
  const Complex p(3.0, -4.0);
  double acc = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const double v = time_sample(p, kOmega, (2.0 * half) * i / n);
    acc += v * v / n;
  }
  CHECK(acc == doctest::Approx(std::norm(p) / 2.0).epsilon(1e-10));
}
