#include "twostep/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace twostep {

ConfigError::ConfigError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
    if (p == std::string_view::npos) break;
    start = p + 1;
  }
  return out;
}

double parse_double(const std::string& v, int line) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("expected a number, got '" + v + "'", line);
  return x;
}

int parse_int(const std::string& v, int line) {
  int x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("expected an integer, got '" + v + "'", line);
  return x;
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'", line);
}

std::vector<double> parse_list(const std::string& v, int line) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (const auto& item : split(v, ',')) out.push_back(parse_double(item, line));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Entry {
  std::string section, key, value;
  int line;
};

// Materials are rebuilt whenever one changes, keeping ids stable.
void set_material(MaterialTable& table, const std::string& name, const std::string& key, double value, int line) {
  std::vector<Material> all = table.all();
  auto it = std::find_if(all.begin(), all.end(), [&](const Material& m) { return m.name == name; });
  if (it == all.end()) {
    all.push_back({name, 0.0, 1.0});
    it = all.end() - 1;
  }
  if (key == "sigma") it->sigma = value;
  else if (key == "mu_r") it->mu_r = value;
  else throw ConfigError("unknown key '" + key + "' in [material." + name + "]", line);
  MaterialTable rebuilt;
  try {
    for (auto& m : all) rebuilt.add(m);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), line);
  }
  table = std::move(rebuilt);
}

std::vector<Segment> parse_segments(const std::string& v, const MaterialTable& materials, int line) {
  std::vector<Segment> out;
  for (const auto& item : split(v, ';')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw ConfigError("segment must read material:length:eddy|static, got '" + item + "'", line);
    const int id = materials.find(parts[0]);
    if (id < 0) throw ConfigError("segment uses unknown material '" + parts[0] + "'", line);
    if (parts[2] != "eddy" && parts[2] != "static")
      throw ConfigError("segment kind must be eddy or static, got '" + parts[2] + "'", line);
    out.push_back({parse_double(parts[1], line), id, parts[2] == "eddy"});
  }
  return out;
}

}  // namespace

RunConfig preset_config(int preset, int cylinder, int refinement) {
  if (preset < 1 || preset > 3) throw ConfigError("preset must be 1, 2 or 3");
  if (refinement < 0) throw ConfigError("refinement must be >= 0");
  RunConfig c;
  c.preset = preset;
  c.refinement = refinement;
  const int air = c.materials.add({"air", 0.0, 1.0});
  const int iron = c.materials.add({"iron", kSigmaIron, kMuRIron});
  c.geometry.core_radius = 3e-3;
  c.geometry.outer_radius = 8e-3;
  c.geometry.air_material = air;
  c.geometry.radial_level = refinement;
  if (preset == 1) {
    c.geometry.segments = {{2e-3, iron, true}};
    c.geometry.layers_per_mm = std::ldexp(1.0, refinement);
    return c;
  }
  if (cylinder < 1 || cylinder > 5) throw ConfigError("cylinder must be C1..C5");
  c.cylinder = cylinder;
  const int copper = c.materials.add({"copper", kSigmaCopper, kMuRCopper});
  const double scale = std::ldexp(1.0, cylinder - 1);
  const double fe = 2e-3 * scale;
  c.geometry.segments = {{fe, iron, true}, {2.0 * fe, copper, preset == 2}, {fe, iron, true}};
  c.geometry.layers_per_mm = 1.0;
  c.outputs.planes = {0.0, 2.0 * fe};
  return c;
}

void RunConfig::validate() const {
  try {
    geometry.validate();
    excitation.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (preset < 0 || preset > 3) throw ConfigError("preset must be 1, 2 or 3");
  const auto check_id = [&](int id) {
    if (id < 0 || id >= materials.size()) throw ConfigError("geometry references an undefined material");
  };
  check_id(geometry.air_material);
  if (materials[geometry.air_material].sigma != 0.0) throw ConfigError("the air material must have sigma = 0");
  for (const auto& s : geometry.segments) {
    check_id(s.material);
    if (!s.eddy && materials[s.material].sigma <= 0.0)
      throw ConfigError("a static segment must be conductive (material '" + materials[s.material].name + "')");
  }
  if (!(solver.options.tol > 0.0)) throw ConfigError("solver tol must be positive");
  if (solver.options.max_iter < 1) throw ConfigError("solver max_iter must be >= 1");
  if (!(solver.shift >= 0.0)) throw ConfigError("solver shift must be >= 0");
  const double L = geometry.total_length();
  for (double z : outputs.planes)
    if (!(z >= 0.0 && z <= L)) throw ConfigError("cross-section plane z = " + fmt(z) + " lies outside the cylinder");
  for (double t : outputs.snapshot_times)
    if (!(t >= 0.0 && t <= excitation.end_time())) throw ConfigError("snapshot time " + fmt(t) + " lies outside the run");
}

std::string RunConfig::run_name() const {
  const std::string level = "L" + std::to_string(refinement);
  if (preset == 0) return "custom_" + level;
  if (preset == 1) return "p1_" + level;
  return "p" + std::to_string(preset) + "_C" + std::to_string(cylinder) + "_" + level;
}

RunConfig parse_config(std::string_view text) {
  std::vector<Entry> entries;
  std::string section;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", lineno);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      static const char* known[] = {"case", "geometry", "excitation", "solver", "output"};
      const bool ok = std::find(std::begin(known), std::end(known), section) != std::end(known) ||
                      (section.rfind("material.", 0) == 0 && section.size() > 9);
      if (!ok) throw ConfigError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
    if (section.empty()) throw ConfigError("key outside of any section", lineno);
    entries.push_back({section, trim(std::string_view(line).substr(0, eq)),
                       trim(std::string_view(line).substr(eq + 1)), lineno});
  }

  int preset = 0, cylinder = 2, refinement = 0;
  bool have_segments = false;
  for (const auto& e : entries) {
    if (e.section == "case") {
      if (e.key == "preset") {
        preset = e.value == "custom" ? 0 : parse_int(e.value, e.line);
        if (preset < 0 || preset > 3) throw ConfigError("preset must be 1, 2, 3 or custom", e.line);
      } else if (e.key == "cylinder") {
        const std::string v = !e.value.empty() && (e.value[0] == 'C' || e.value[0] == 'c') ? e.value.substr(1) : e.value;
        cylinder = parse_int(v, e.line);
        if (cylinder < 1 || cylinder > 5) throw ConfigError("cylinder must be C1..C5", e.line);
      } else if (e.key == "refinement") {
        refinement = parse_int(e.value, e.line);
        if (refinement < 0) throw ConfigError("refinement must be >= 0", e.line);
      } else {
        throw ConfigError("unknown key '" + e.key + "' in [case]", e.line);
      }
    }
    if (e.section == "geometry" && e.key == "segments") have_segments = true;
  }
  if (preset == 0 && !have_segments) throw ConfigError("missing preset or geometry");

  RunConfig c;
  if (preset > 0) {
    c = preset_config(preset, cylinder, refinement);
  } else {
    c.refinement = refinement;
    c.geometry.radial_level = refinement;
  }

  for (const auto& e : entries)
    if (e.section.rfind("material.", 0) == 0)
      set_material(c.materials, e.section.substr(9), e.key, parse_double(e.value, e.line), e.line);

  for (const auto& e : entries) {
    const auto& k = e.key;
    const auto& v = e.value;
    const int ln = e.line;
    const auto unknown = [&] { throw ConfigError("unknown key '" + k + "' in [" + e.section + "]", ln); };
    if (e.section == "geometry") {
      auto& g = c.geometry;
      if (k == "core_radius") g.core_radius = parse_double(v, ln);
      else if (k == "outer_radius") g.outer_radius = parse_double(v, ln);
      else if (k == "layers_per_mm") g.layers_per_mm = parse_double(v, ln);
      else if (k == "grading") g.grading = parse_double(v, ln);
      else if (k == "conductor_rings") g.resolution.conductor_rings = parse_int(v, ln);
      else if (k == "air_rings") g.resolution.air_rings = parse_int(v, ln);
      else if (k == "sectors") g.resolution.sectors = parse_int(v, ln);
      else if (k == "segments") g.segments = parse_segments(v, c.materials, ln);
      else if (k == "air") {
        g.air_material = c.materials.find(v);
        if (g.air_material < 0) throw ConfigError("unknown air material '" + v + "'", ln);
      } else unknown();
    } else if (e.section == "excitation") {
      auto& x = c.excitation;
      if (k == "amplitude") x.amplitude = parse_double(v, ln);
      else if (k == "frequency") x.frequency = parse_double(v, ln);
      else if (k == "periods") x.periods = parse_int(v, ln);
      else if (k == "steps_per_period") x.steps_per_period = parse_int(v, ln);
      else if (k == "duration") x.duration = parse_double(v, ln);
      else if (k == "steps") x.steps = parse_int(v, ln);
      else unknown();
    } else if (e.section == "solver") {
      auto& s = c.solver;
      if (k == "method") {
        if (v == "factorized") s.step2 = Step2Method::FactorizedCG;
        else if (v == "iterative") s.step2 = Step2Method::IterativeCG;
        else throw ConfigError("solver method must be factorized or iterative", ln);
      } else if (k == "tol") s.options.tol = parse_double(v, ln);
      else if (k == "max_iter") s.options.max_iter = parse_int(v, ln);
      else if (k == "shift") s.shift = parse_double(v, ln);
      else if (k == "precond") {
        if (v == "none") s.options.precond = Preconditioner::None;
        else if (v == "diagonal") s.options.precond = Preconditioner::Diagonal;
        else if (v == "sweep") s.options.precond = Preconditioner::SymmetricSweep;
        else throw ConfigError("precond must be none, diagonal or sweep", ln);
      } else unknown();
    } else if (e.section == "output") {
      auto& o = c.outputs;
      if (k == "snapshots") o.snapshot_times = parse_list(v, ln);
      else if (k == "planes") o.planes = parse_list(v, ln);
      else if (k == "oracle") o.compare_oracle = parse_bool(v, ln);
      else unknown();
    }
  }
  if (c.geometry.air_material >= c.materials.size() || c.materials.size() == 0)
    throw ConfigError("no air material defined");
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "[case]\n";
  out << "preset = " << (c.preset == 0 ? std::string("custom") : std::to_string(c.preset)) << '\n';
  if (c.preset >= 2) out << "cylinder = C" << c.cylinder << '\n';
  out << "refinement = " << c.refinement << "\n\n";
  for (const auto& m : c.materials.all())
    out << "[material." << m.name << "]\nsigma = " << fmt(m.sigma) << "\nmu_r = " << fmt(m.mu_r) << "\n\n";
  const auto& g = c.geometry;
  out << "[geometry]\n";
  out << "core_radius = " << fmt(g.core_radius) << '\n';
  out << "outer_radius = " << fmt(g.outer_radius) << '\n';
  out << "layers_per_mm = " << fmt(g.layers_per_mm) << '\n';
  out << "grading = " << fmt(g.grading) << '\n';
  out << "conductor_rings = " << g.resolution.conductor_rings << '\n';
  out << "air_rings = " << g.resolution.air_rings << '\n';
  out << "sectors = " << g.resolution.sectors << '\n';
  out << "air = " << c.materials[g.air_material].name << '\n';
  out << "segments = ";
  for (std::size_t i = 0; i < g.segments.size(); ++i) {
    const auto& s = g.segments[i];
    out << (i ? "; " : "") << c.materials[s.material].name << ':' << fmt(s.length) << ':'
        << (s.eddy ? "eddy" : "static");
  }
  out << "\n\n";
  const auto& x = c.excitation;
  out << "[excitation]\namplitude = " << fmt(x.amplitude) << "\nfrequency = " << fmt(x.frequency)
      << "\nperiods = " << x.periods << "\nsteps_per_period = " << x.steps_per_period
      << "\nduration = " << fmt(x.duration) << "\nsteps = " << x.steps << "\n\n";
  const auto& s = c.solver;
  const char* precond = s.options.precond == Preconditioner::None       ? "none"
                        : s.options.precond == Preconditioner::Diagonal ? "diagonal"
                                                                        : "sweep";
  out << "[solver]\nmethod = " << (s.step2 == Step2Method::FactorizedCG ? "factorized" : "iterative")
      << "\ntol = " << fmt(s.options.tol) << "\nmax_iter = " << s.options.max_iter << "\nshift = " << fmt(s.shift)
      << "\nprecond = " << precond << "\n\n";
  const auto list = [](const std::vector<double>& v) {
    std::string r;
    for (std::size_t i = 0; i < v.size(); ++i) r += (i ? ", " : "") + fmt(v[i]);
    return r;
  };
  out << "[output]\nsnapshots = " << list(c.outputs.snapshot_times) << "\nplanes = " << list(c.outputs.planes)
      << "\noracle = " << (c.outputs.compare_oracle ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace twostep
