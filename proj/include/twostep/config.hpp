#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twostep/driver.hpp"
#include "twostep/geometry.hpp"

namespace twostep {

/// Parse or validation failure; `line` is 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

struct OutputSpec {
  std::vector<double> snapshot_times;  // s; nearest step is written
  std::vector<double> planes;          // z (m) of cross sections
  bool compare_oracle = true;
  bool operator==(const OutputSpec&) const = default;
};

struct RunConfig {
  int preset = 0;      // 0 = custom, otherwise 1..3
  int cylinder = 0;    // 1..5 for presets 2 and 3
  int refinement = 0;  // disk refinement level
  CylinderSpec geometry;
  MaterialTable materials;
  ExcitationSpec excitation;
  SolverSettings solver;
  OutputSpec outputs;

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
  /// "p<preset>_C<cylinder>_L<level>" ("custom" for preset 0).
  std::string run_name() const;

  bool operator==(const RunConfig&) const = default;
};

inline constexpr double kSigmaIron = 1e7;
inline constexpr double kMuRIron = 1500.0;
inline constexpr double kSigmaCopper = 6e7;
inline constexpr double kMuRCopper = 1.0;

/// Expanded preset (1: iron only, 2: iron/copper/iron all eddy, 3: copper static).
RunConfig preset_config(int preset, int cylinder = 2, int refinement = 0);

/// Line grammar:  `# comment`, `[section]`, `key = value`.  See README.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
/// Text that parses back to an identical config.
std::string serialize_config(const RunConfig& config);

}  // namespace twostep
