#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "twostep/config.hpp"
#include "twostep/runner.hpp"

using namespace twostep;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("twostep_cfg_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("preset 1 expands with refined layers") {
  const RunConfig c = parse_config("[case]\npreset = 1\nrefinement = 2\n");
  CHECK(c.preset == 1);
  CHECK(c.geometry.layers_per_mm == 4.0);
  CHECK(c.geometry.radial_level == 2);
  CHECK(c.geometry.core_radius == 3e-3);
  REQUIRE(c.geometry.segments.size() == 1);
  CHECK(c.geometry.segments[0].length == 2e-3);
  const auto& iron = c.materials[c.geometry.segments[0].material];
  CHECK(iron.sigma == 1e7);
  CHECK(iron.mu_r == 1500.0);
  CHECK(c.excitation.amplitude == 1000.0);
  CHECK(c.excitation.frequency == 50.0);
  CHECK(c.excitation.periods == 7);
  CHECK(c.excitation.steps_per_period == 50);
  CHECK(c.run_name() == "p1_L2");
}

TEST_CASE("empty text is rejected") {
  try {
    parse_config("# nothing here\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("missing preset or geometry") != std::string::npos);
  }
}

TEST_CASE("preset 3 on C2") {
  const RunConfig c = parse_config("[case]\npreset = 3\ncylinder = C2\n");
  REQUIRE(c.geometry.segments.size() == 3);
  CHECK(c.geometry.segments[0].length == doctest::Approx(4e-3).epsilon(1e-15));
  CHECK(c.geometry.segments[1].length == doctest::Approx(8e-3).epsilon(1e-15));
  CHECK(c.geometry.segments[2].length == doctest::Approx(4e-3).epsilon(1e-15));
  CHECK(c.geometry.segments[0].eddy);
  CHECK_FALSE(c.geometry.segments[1].eddy);
  CHECK(c.materials[c.geometry.segments[1].material].name == "copper");
  CHECK(c.outputs.planes == std::vector<double>{0.0, 8e-3});
  CHECK(c.run_name() == "p3_C2_L0");
}

TEST_CASE("presets 2 and 3 differ only in the copper model") {
  for (int cyl = 1; cyl <= 5; ++cyl) {
    RunConfig a = preset_config(2, cyl), b = preset_config(3, cyl);
    CHECK(a.geometry.segments[1].eddy);
    CHECK_FALSE(b.geometry.segments[1].eddy);
    b.geometry.segments[1].eddy = true;
    b.preset = 2;
    CHECK(a == b);
  }
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_config("[case]\npreset = 1\n\n[excitation]\nbogus = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 5") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[nowhere]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[case]\npreset = 1\n[excitation]\nperiods = two\n"), ConfigError);
}

TEST_CASE("custom geometry and overrides") {
  const RunConfig c = parse_config(R"(# custom two-metal bar
[material.air]
sigma = 0
[material.steel]
sigma = 5e6
mu_r = 200
[material.cu]
sigma = 6e7
[geometry]
air = air
segments = steel:0.002:eddy; cu:0.004:static
layers_per_mm = 2
[excitation]
frequency = 60
periods = 2
[solver]
method = iterative
precond = sweep
tol = 1e-9
[output]
planes = 0, 0.002
snapshots = 0.01
oracle = false
)");
  CHECK(c.preset == 0);
  CHECK(c.run_name() == "custom_L0");
  REQUIRE(c.geometry.segments.size() == 2);
  CHECK(c.materials[c.geometry.segments[0].material].mu_r == 200.0);
  CHECK_FALSE(c.geometry.segments[1].eddy);
  CHECK(c.excitation.frequency == 60.0);
  CHECK(c.solver.step2 == Step2Method::IterativeCG);
  CHECK(c.solver.options.precond == Preconditioner::SymmetricSweep);
  CHECK(c.outputs.planes.size() == 2);
  CHECK_FALSE(c.outputs.compare_oracle);
  CHECK(parse_config(serialize_config(c)) == c);
}

TEST_CASE("serialization round trip") {
  for (int p = 1; p <= 3; ++p) {
    RunConfig c = preset_config(p, 3, 1);
    c.excitation.amplitude = 1234.5678901234567;
    c.solver.options.tol = 3.3e-11;
    c.outputs.snapshot_times = {0.001, 0.1 / 3.0};
    CHECK(parse_config(serialize_config(c)) == c);
  }
}

TEST_CASE("validation failure creates no output") {
  const auto out = scratch("invalid");
  RunConfig c = preset_config(1);
  c.solver.options.tol = -1.0;
  CHECK_THROWS_AS(run_case(c, out), ConfigError);
  CHECK_FALSE(std::filesystem::exists(out));
  CHECK_THROWS_AS(parse_config("[case]\npreset = 1\n[solver]\ntol = -1\n"), ConfigError);
}

TEST_CASE("run_case writes deterministic output") {
  const auto out = scratch("run");
  RunConfig c = preset_config(1);
  c.excitation.periods = 2;
  const auto r = run_case(c, out);
  CHECK(r.records.size() == 100);
  const auto dir = out / c.run_name();
  const std::string first = slurp(dir / "records.csv");
  int lines = 0;
  for (char ch : first) lines += ch == '\n';
  CHECK(lines == 101);
  CHECK(std::filesystem::exists(dir / "errors.csv"));
  CHECK(parse_config(slurp(dir / "config.ini")) == c);
  REQUIRE(r.summary.rel_L2.has_value());
  CHECK(*r.summary.rel_L2 > 0.0);
  CHECK(*r.summary.rel_L2 < 1.0);
  run_case(c, out);
  CHECK(slurp(dir / "records.csv") == first);
  std::filesystem::remove_all(out);
}

TEST_CASE("convergence table") {
  std::vector<ConvergenceRow> rows;
  for (int k = 0; k < 3; ++k) rows.push_back({k, 1000 << (3 * k), 0.5 / (1 << k), 0.3 / (1 << k)});
  const auto t = convergence_table(rows);
  REQUIRE(t.slope_L2.has_value());
  CHECK(*t.slope_L2 == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(*t.slope_curl == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));

  const auto out = scratch("conv");
  std::filesystem::create_directories(out);
  write_convergence_csv(out / "a.csv", convergence_table({rows[0]}));
  const std::string single = slurp(out / "a.csv");
  CHECK(single.find("level,N,e_L2,e_curl\n") == 0);
  CHECK(single.find("slope,,unavailable,unavailable") != std::string::npos);
  std::filesystem::remove_all(out);
}
