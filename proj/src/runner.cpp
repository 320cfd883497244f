#include "twostep/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>

namespace twostep {

namespace {

const Segment& segment_at(const CylinderSpec& g, double z) {
  double z0 = 0.0;
  for (const auto& s : g.segments) {
    if (z < z0 + s.length) return s;
    z0 += s.length;
  }
  return g.segments.back();
}

CylinderOracle oracle_for(const RunConfig& c, const Segment& s) {
  const Material& m = c.materials[s.material];
  const double mu_out = c.materials[c.geometry.air_material].mu();
  const double I = -c.excitation.amplitude;
  if (s.eddy && c.excitation.frequency > 0.0) {
    const EddyCylinderSolution sol(c.geometry.core_radius, m.mu(), m.sigma, c.excitation.omega(), Complex(I, 0.0),
                                   mu_out);
    return CylinderOracle::eddy(sol, -1.0);
  }
  auto o = CylinderOracle::stationary(StaticCylinderSolution(c.geometry.core_radius, m.mu(), mu_out, I), -1.0);
  o.omega = c.excitation.omega();
  return o;
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_errors_csv(const std::filesystem::path& path, const RunConfig& c, const std::vector<ErrorRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "t,e_j,norm_j,e_B,norm_B";
  for (std::size_t p = 0; p < c.outputs.planes.size(); ++p) out << ",e_plane" << p << ",norm_plane" << p;
  out << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    out << fmt(r.t) << ',' << fmt(r.j ? r.j->error() : nan) << ',' << fmt(r.j ? std::sqrt(r.j->norm_sq) : nan) << ','
        << fmt(r.B ? r.B->error() : nan) << ',' << fmt(r.B ? std::sqrt(r.B->norm_sq) : nan);
    for (const auto& p : r.planes) out << ',' << fmt(p.error()) << ',' << fmt(std::sqrt(p.norm_sq));
    out << '\n';
  }
}

}  // namespace

std::optional<CylinderOracle> volume_oracle(const RunConfig& c) {
  const auto& segs = c.geometry.segments;
  for (const auto& s : segs)
    if (s.material != segs.front().material || s.eddy != segs.front().eddy) return std::nullopt;
  return oracle_for(c, segs.front());
}

CylinderOracle plane_oracle(const RunConfig& c, double z) {
  const double L = c.geometry.total_length();
  const double h = 0.5 * c.geometry.layer_thickness();
  return oracle_for(c, segment_at(c.geometry, z + h <= L ? z + h : z - h));
}

RunConfig at_level(const RunConfig& config, int level) {
  RunConfig c = config;
  c.refinement = level;
  c.geometry.radial_level = level;
  if (c.preset == 1) c.geometry.layers_per_mm = std::ldexp(1.0, level);
  return c;
}

RunResult run_case(const RunConfig& c, const std::optional<std::filesystem::path>& out) {
  c.validate();
  const Mesh mesh = build_cylinder_mesh(c.geometry, c.materials);
  TwoStepSolver solver(mesh, c.materials, c.excitation, c.solver);

  const bool periodic = c.excitation.frequency > 0.0;
  const double t_end = c.excitation.end_time();
  const double window = periodic ? c.excitation.period() : 0.0;
  const double dt = c.excitation.dt();
  const auto vol = c.outputs.compare_oracle ? volume_oracle(c) : std::nullopt;
  std::vector<CylinderOracle> planes;
  if (c.outputs.compare_oracle)
    for (double z : c.outputs.planes) planes.push_back(plane_oracle(c, z));

  std::optional<std::filesystem::path> dir;
  std::vector<int> snapshot_steps;
  if (out) {
    dir = *out / c.run_name();
    std::filesystem::create_directories(*dir / "snapshots");
    for (double t : c.outputs.snapshot_times) snapshot_steps.push_back(static_cast<int>(std::lround(t / dt)));
  }

  RunResult result;
  const auto on_step = [&](const TwoStepSolver& s, const StepRecord& r) {
    if (c.outputs.compare_oracle) {
      ErrorRow row;
      row.t = r.t;
      if (vol && r.t >= t_end - window - 1e-9 * dt) {
        row.j = volume_error_L2(s, *vol, r.t);
        row.B = curl_seminorm_error(s, *vol, r.t);
      }
      for (std::size_t p = 0; p < planes.size(); ++p)
        row.planes.push_back(cross_section_error(s, planes[p], c.outputs.planes[p], r.t));
      result.errors.push_back(std::move(row));
    }
    if (dir && (std::find(snapshot_steps.begin(), snapshot_steps.end(), r.step) != snapshot_steps.end())) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%05d.vtk", r.step);
      write_vtk(s, *dir / "snapshots" / name);
    }
  };
  if (dir && std::find(snapshot_steps.begin(), snapshot_steps.end(), 0) != snapshot_steps.end())
    write_vtk(solver, *dir / "snapshots" / "step_00000.vtk");
  result.records = solver.run(on_step);

  auto& sum = result.summary;
  sum.cells = mesh.num_cells();
  sum.layers = c.geometry.layer_count();
  if (!result.errors.empty()) {
    std::vector<double> t, e, n;
    const auto integrate = [&](auto pick) {
      t.clear(), e.clear(), n.clear();
      for (const auto& row : result.errors) {
        const auto s = pick(row);
        if (!s) continue;
        t.push_back(row.t);
        e.push_back(s->error());
        n.push_back(std::sqrt(s->norm_sq));
      }
    };
    const auto relative = [&]() {
      if (!periodic) return e.back() / n.back();
      return period_integrated_error(t, e, window) / period_integrated_error(t, n, window);
    };
    if (vol) {
      integrate([](const ErrorRow& r) { return r.j; });
      sum.rel_L2 = relative();
      integrate([](const ErrorRow& r) { return r.B; });
      sum.rel_curl = relative();
    }
    for (std::size_t p = 0; p < planes.size(); ++p) {
      integrate([p](const ErrorRow& r) { return std::optional<ErrorSample>(r.planes[p]); });
      sum.plane_relative.push_back(relative());
      sum.plane_average.push_back(periodic ? period_average(t, e, window) : e.back());
    }
  }

  if (dir) {
    write_csv(*dir / "records.csv", result.records);
    if (c.outputs.compare_oracle) write_errors_csv(*dir / "errors.csv", c, result.errors);
    std::ofstream cfg(*dir / "config.ini");
    cfg << serialize_config(c);
  }
  return result;
}

ConvergenceTable convergence_table(std::vector<ConvergenceRow> rows) {
  ConvergenceTable t;
  t.rows = std::move(rows);
  if (t.rows.size() >= 3) {
    std::vector<double> N, a, b;
    for (const auto& r : t.rows) {
      N.push_back(r.cells);
      a.push_back(r.rel_L2);
      b.push_back(r.rel_curl);
    }
    t.slope_L2 = convergence_slope(N, a);
    t.slope_curl = convergence_slope(N, b);
  }
  return t;
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "level,N,e_L2,e_curl\n";
  for (const auto& r : table.rows)
    out << r.level << ',' << r.cells << ',' << fmt(r.rel_L2) << ',' << fmt(r.rel_curl) << '\n';
  if (table.slope_L2) out << "slope,," << fmt(*table.slope_L2) << ',' << fmt(*table.slope_curl) << '\n';
  else out << "slope,,unavailable,unavailable\n";
}

ConvergenceTable convergence_study(const RunConfig& base, const std::vector<int>& levels,
                                   const std::optional<std::filesystem::path>& out, int threads) {
  if (levels.empty()) throw ConfigError("convergence study needs at least one level");
  if (!volume_oracle(base)) throw ConfigError("convergence study needs a homogeneous eddy-current cylinder");
  std::vector<ConvergenceRow> rows;
  const auto finish = [&](std::vector<ConvergenceRow> r) {
    auto table = convergence_table(std::move(r));
    if (out) {
      std::filesystem::create_directories(*out);
      write_convergence_csv(*out / "convergence.csv", table);
    }
    return table;
  };
  const auto run_level = [&](int level) {
    const RunResult r = run_case(at_level(base, level), out);
    return ConvergenceRow{level, r.summary.cells, *r.summary.rel_L2, *r.summary.rel_curl};
  };
  try {
    const std::size_t batch = static_cast<std::size_t>(std::max(1, threads));
    for (std::size_t i = 0; i < levels.size(); i += batch) {
      std::vector<std::future<ConvergenceRow>> jobs;
      for (std::size_t k = i; k < std::min(levels.size(), i + batch); ++k)
        jobs.push_back(std::async(batch == 1 ? std::launch::deferred : std::launch::async, run_level, levels[k]));
      for (auto& j : jobs) rows.push_back(j.get());
    }
  } catch (...) {
    finish(rows);
    throw;
  }
  return finish(rows);
}

}  // namespace twostep
