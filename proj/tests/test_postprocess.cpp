#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "twostep/config.hpp"
#include "twostep/postprocess.hpp"
#include "twostep/runner.hpp"

using namespace twostep;

namespace {

const double kOmega = 2.0 * std::numbers::pi * 50.0;

CylinderOracle iron_oracle(double R) {
  return CylinderOracle::eddy(EddyCylinderSolution(R, kMuRIron * kMu0, kSigmaIron, kOmega, Complex(-1000.0, 0.0), kMu0),
                              -1.0);
}

Mesh coarse_mesh(int refinement = 0) {
  const RunConfig c = preset_config(1, 2, refinement);
  return build_cylinder_mesh(c.geometry, c.materials);
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("twostep_pp_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("oracle against itself and against zero") {
  const Mesh m = coarse_mesh();
  const auto o = iron_oracle(3e-3);
  const double t = 0.0123;
  const CellField exact = [&](int c, const Vec4& b) {
    const TetGeometry g = tet_geometry(m, c);
    return o.current_density(g.point(b), t);
  };
  const CellField zero = [](int, const Vec4&) { return Vec3::Zero().eval(); };
  const auto same = volume_error_L2(m, exact, o, t);
  CHECK(same.error_sq == 0.0);
  CHECK(same.norm_sq > 0.0);
  const auto none = volume_error_L2(m, zero, o, t);
  CHECK(none.error_sq == doctest::Approx(none.norm_sq).epsilon(1e-14));
  CHECK(none.relative() == doctest::Approx(1.0).epsilon(1e-14));

  const CellField doubled = [&](int c, const Vec4& b) { return (2.0 * exact(c, b)).eval(); };
  CHECK(volume_error_L2(m, doubled, o, t).relative() == doctest::Approx(1.0).epsilon(1e-13));

  const CellConstant noB = [](int) { return Vec3::Zero().eval(); };
  const auto b0 = curl_seminorm_error(m, noB, o, t);
  CHECK(b0.relative() == doctest::Approx(1.0).epsilon(1e-14));

  const auto cs = cross_section_error(m, exact, o, 0.0, t);
  CHECK(cs.error_sq == 0.0);
  CHECK(cs.norm_sq > 0.0);
  CHECK(cross_section_error(m, zero, o, m.z_planes.back(), t).relative() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(cross_section_error(m, exact, o, 0.5 * m.z_planes[1], t), std::invalid_argument);
}

TEST_CASE("error homogeneity under scaling of the excitation") {
  const Mesh m = coarse_mesh();
  const auto o1 = iron_oracle(3e-3);
  const auto o2 = CylinderOracle::eddy(
      EddyCylinderSolution(3e-3, kMuRIron * kMu0, kSigmaIron, kOmega, Complex(-3000.0, 0.0), kMu0), -1.0);
  const CellField approx = [&](int c, const Vec4&) { return o1.current_density(m.cell_centroid(c), 0.002); };
  const CellField approx3 = [&](int c, const Vec4& b) { return (3.0 * approx(c, b)).eval(); };
  const auto a = volume_error_L2(m, approx, o1, 0.002), b = volume_error_L2(m, approx3, o2, 0.002);
  CHECK(b.error() == doctest::Approx(3.0 * a.error()).epsilon(1e-12));
  CHECK(b.relative() == doctest::Approx(a.relative()).epsilon(1e-12));
}

TEST_CASE("analytic norm converges under refinement") {
  const auto o = iron_oracle(3e-3);
  const double t = 0.004;
  const CellField exact0 = [](int, const Vec4&) { return Vec3::Zero().eval(); };
  double n[3];
  for (int k = 0; k < 3; ++k) {
    const Mesh m = coarse_mesh(k);
    n[k] = std::sqrt(volume_error_L2(m, exact0, o, t).norm_sq / m.z_planes.back());
  }
  CHECK(n[0] == doctest::Approx(n[2]).epsilon(0.1));
  CHECK(std::abs(n[2] - n[1]) < 0.5 * std::abs(n[1] - n[0]));
}

TEST_CASE("period integrals") {
  const double T = 0.02;
  std::vector<double> t, one, zero, sine;
  for (int i = 0; i <= 200; ++i) {
    t.push_back(T * i / 100.0);
    one.push_back(2.5);
    zero.push_back(0.0);
    sine.push_back(std::sin(2.0 * std::numbers::pi * t.back() / T));
  }
  CHECK(period_integrated_error(t, one, T) == doctest::Approx(2.5 * std::sqrt(T)).epsilon(1e-12));
  CHECK(period_integrated_error(t, zero, T) == 0.0);
  CHECK(period_integrated_error(t, sine, T) == doctest::Approx(std::sqrt(T / 2.0)).epsilon(1e-3));
  CHECK(period_average(t, one, T) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(std::abs(period_average(t, sine, T)) < 1e-12);
  CHECK(period_rms(t, sine, T) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));
  const std::vector<double> short_t(t.begin(), t.begin() + 50), short_v(50, 1.0);
  CHECK_THROWS_AS(period_average(short_t, short_v, T), std::invalid_argument);
}

TEST_CASE("normalized voltage and convergence slopes") {
  CHECK(normalized_voltage(12.0, 4) == 3.0);
  CHECK_THROWS(normalized_voltage(1.0, 0));
  const std::vector<double> N{1e3, 8e3, 64e3}, e{1.0, 0.5, 0.25};
  CHECK(convergence_slope(N, e) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  const std::vector<double> e7{7.0, 3.5, 1.75};
  CHECK(convergence_slope(N, e7) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  const std::vector<double> Ns{5e3, 40e3, 320e3};
  CHECK(convergence_slope(Ns, e) == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  const std::vector<double> dup{1e3, 1e3, 8e3};
  CHECK_THROWS(convergence_slope(dup, e));
  const std::vector<double> two{1e3, 8e3}, e2{1.0, 0.5};
  CHECK_THROWS(convergence_slope(two, e2));
}

TEST_CASE("record CSV") {
  std::ostringstream empty;
  write_csv(empty, std::span<const StepRecord>{});
  CHECK(empty.str() == std::string(kRecordHeader) + "\n");

  std::vector<StepRecord> rs(3);
  for (int i = 0; i < 3; ++i) {
    rs[i].step = i + 1;
    rs[i].t = 0.1 * (i + 1) / 3.0;
    rs[i].I1 = -1000.0 / 7.0 * (i + 1);
    rs[i].I1_dc = rs[i].I1;
    rs[i].I1_ec = 1e-17 * i;
    rs[i].V1_dc = std::numbers::pi * i;
    rs[i].V1_ec = -std::numbers::e;
    rs[i].U_sum = 1.0 / 3.0;
    rs[i].P_ohm = 2.0 / 3.0;
    rs[i].P_mag = -1e300;
    rs[i].P_total = 5e-310;
    if (i != 1) rs[i].U_power = 0.1 + i;
  }
  const auto dir = scratch("csv");
  write_csv(dir / "r.csv", rs);
  const auto back = read_csv(dir / "r.csv");
  REQUIRE(back.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(back[i].t == rs[i].t);
    CHECK(back[i].I1 == rs[i].I1);
    CHECK(back[i].I1_ec == rs[i].I1_ec);
    CHECK(back[i].V1_dc == rs[i].V1_dc);
    CHECK(back[i].V1_ec == rs[i].V1_ec);
    CHECK(back[i].U_sum == rs[i].U_sum);
    CHECK(back[i].P_mag == rs[i].P_mag);
    CHECK(back[i].P_total == rs[i].P_total);
    CHECK(back[i].U_power == rs[i].U_power);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("VTK snapshot") {
  RunConfig c = preset_config(1, 2, 0);
  c.excitation.periods = 1;
  c.excitation.steps_per_period = 4;
  const Mesh m = build_cylinder_mesh(c.geometry, c.materials);
  TwoStepSolver s(m, c.materials, c.excitation);
  s.advance();
  const auto dir = scratch("vtk");
  write_vtk(s, dir / "s.vtk");
  std::ifstream in(dir / "s.vtk");
  std::string line, points, cells;
  int vectors = 0;
  while (std::getline(in, line)) {
    if (line.rfind("POINTS", 0) == 0) points = line;
    if (line.rfind("CELLS", 0) == 0) cells = line;
    if (line.rfind("VECTORS", 0) == 0) ++vectors;
  }
  CHECK(points.find(std::to_string(m.num_nodes())) != std::string::npos);
  CHECK(cells.find(std::to_string(m.num_cells())) != std::string::npos);
  CHECK(vectors == 2);
  std::filesystem::remove_all(dir);
}
