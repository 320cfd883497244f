#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "twostep/config.hpp"
#include "twostep/postprocess.hpp"

namespace twostep {

/// Oracle for the whole conductor, available when every segment shares one
/// material and eddy flag.
std::optional<CylinderOracle> volume_oracle(const RunConfig& config);
/// Oracle for the material and model of the conductor layer used at plane z.
CylinderOracle plane_oracle(const RunConfig& config, double z);

struct ErrorRow {
  double t = 0.0;
  std::optional<ErrorSample> j, B;  // volume errors, final period only
  std::vector<ErrorSample> planes;  // one per configured plane, every step
};

struct RunSummary {
  int cells = 0;
  int layers = 0;
  std::optional<double> rel_L2, rel_curl;  // period-integrated relative errors
  std::vector<double> plane_average;       // period-averaged absolute plane errors
  std::vector<double> plane_relative;      // period-integrated relative plane errors
};

struct RunResult {
  std::vector<StepRecord> records;
  std::vector<ErrorRow> errors;
  RunSummary summary;
};

/// Mesh, time loop and oracle comparison.  With `out` set, files go to
/// out/<run_name>/ (records.csv, errors.csv, snapshots/).
RunResult run_case(const RunConfig& config, const std::optional<std::filesystem::path>& out = std::nullopt);

/// Copy of `config` at another refinement level (preset 1 also refines layers).
RunConfig at_level(const RunConfig& config, int level);

struct ConvergenceRow {
  int level = 0;
  int cells = 0;
  double rel_L2 = 0.0;
  double rel_curl = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::optional<double> slope_L2, slope_curl;  // empty below three rows
};

ConvergenceTable convergence_table(std::vector<ConvergenceRow> rows);
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceTable& table);

/// Runs every level (up to `threads` at once) and writes convergence.csv.
/// On failure the rows finished so far are written before rethrowing.
ConvergenceTable convergence_study(const RunConfig& base, const std::vector<int>& levels,
                                   const std::optional<std::filesystem::path>& out = std::nullopt, int threads = 1);

}  // namespace twostep
