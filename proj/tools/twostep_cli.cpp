#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "twostep/runner.hpp"

using namespace twostep;

namespace {

int fail(const std::string& stage, const std::exception& e) {
  std::cerr << "error [" << stage << "]: " << e.what() << '\n';
  return 1;
}

void print_profile(std::ostream& out, const RunConfig& c, const std::string& material, bool stationary, int samples) {
  const int id = c.materials.find(material);
  if (id < 0) throw ConfigError("unknown material '" + material + "'");
  const Material& m = c.materials[id];
  const double R = c.geometry.core_radius;
  const double mu_out = c.materials[c.geometry.air_material].mu();
  const Complex I(-c.excitation.amplitude, 0.0);
  std::function<RadialFields(double)> f;
  if (stationary || c.excitation.frequency == 0.0) {
    StaticCylinderSolution s(R, m.mu(), mu_out, I.real());
    f = [s](double r) { return s.fields(r); };
  } else {
    EddyCylinderSolution s(R, m.mu(), m.sigma, c.excitation.omega(), I, mu_out);
    f = [s](double r) { return s.fields(r); };
  }
  out << "r,re_j,im_j,abs_j,re_B,im_B,abs_B\n";
  out.precision(12);
  for (int i = 0; i <= samples; ++i) {
    const double r = c.geometry.outer_radius * i / samples;
    const auto v = f(r);
    out << r << ',' << v.j.real() << ',' << v.j.imag() << ',' << std::abs(v.j) << ',' << v.B.real() << ','
        << v.B.imag() << ',' << std::abs(v.B) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step eddy-current / magneto-static cylinder solver"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  int threads = 1;
  bool deterministic = false;

  auto* run = app.add_subcommand("run", "Run one case");
  run->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory");

  auto* study = app.add_subcommand("study", "Convergence study over refinement levels");
  std::vector<int> levels{0, 1, 2};
  study->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  study->add_option("--out", out_dir, "Output directory");
  study->add_option("--levels", levels, "Refinement levels")->delimiter(',');

  auto* oracle = app.add_subcommand("oracle", "Analytic radial profile as CSV");
  std::string material = "iron";
  int samples = 200;
  bool stationary = false;
  oracle->add_option("--config", config_path, "Configuration file (default: preset 2)")->check(CLI::ExistingFile);
  oracle->add_option("--out", out_dir, "Output file (default: stdout)");
  oracle->add_option("--material", material, "Material name");
  oracle->add_option("--samples", samples, "Radial intervals up to R_air")->check(CLI::PositiveNumber);
  oracle->add_flag("--static", stationary, "Magneto-static profile");

  for (auto* sub : {run, study, oracle}) {
    sub->add_option("--threads", threads, "Concurrent runs in a study")->check(CLI::PositiveNumber);
    sub->add_flag("--deterministic", deterministic, "Force single-threaded execution");
  }

  CLI11_PARSE(app, argc, argv);
  if (deterministic) threads = 1;

  RunConfig config;
  try {
    config = config_path.empty() ? preset_config(2) : load_config(config_path);
  } catch (const std::exception& e) {
    return fail("config", e);
  }

  try {
    if (*run) {
      const RunResult r = run_case(config, std::filesystem::path(out_dir));
      std::cout << config.run_name() << ": " << r.records.size() << " steps, " << r.summary.cells << " cells\n";
      if (r.summary.rel_L2)
        std::cout << "relative error j " << *r.summary.rel_L2 << ", B " << *r.summary.rel_curl << '\n';
      for (std::size_t p = 0; p < r.summary.plane_average.size(); ++p)
        std::cout << "plane z=" << config.outputs.planes[p] << " period-averaged error "
                  << r.summary.plane_average[p] << '\n';
    } else if (*study) {
      const auto t = convergence_study(config, levels, std::filesystem::path(out_dir), threads);
      for (const auto& row : t.rows)
        std::cout << "level " << row.level << " N=" << row.cells << " e_L2=" << row.rel_L2
                  << " e_curl=" << row.rel_curl << '\n';
      if (t.slope_L2) std::cout << "slopes " << *t.slope_L2 << ' ' << *t.slope_curl << '\n';
      else std::cout << "slopes unavailable (fewer than 3 levels)\n";
    } else if (*oracle) {
      if (oracle->count("--out")) {
        std::ofstream f(out_dir);
        if (!f) throw std::runtime_error("cannot open '" + out_dir + "' for writing");
        print_profile(f, config, material, stationary, samples);
      } else {
        print_profile(std::cout, config, material, stationary, samples);
      }
    }
  } catch (const std::exception& e) {
    return fail(app.get_subcommands().front()->get_name(), e);
  }
  return 0;
}
