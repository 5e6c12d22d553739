#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/ma_solver/solver.hpp"

namespace malab {

enum class Problem { Radial, Oscillatory, Wang, Mu };

std::string to_string(Problem p);

struct ExperimentConfig {
  Problem problem = Problem::Radial;
  std::string domain = "ball";  // ball | square; Wang fields live on a box instead
  std::vector<int> grids{65, 129};
  bool refinement_check = true;
  std::uint64_t seed = 1;
  std::string output = "malab_out";
  SolverOptions solver;

  double oscillation_amplitude = 0.9;
  int oscillation_cells = 4;

  double wang_alpha = 3.0;
  double wang_level = 1.0 / 16;  // analysis region {u < level}
  std::vector<double> wang_half_widths{1.05, 1.0};

  std::string measure_file;  // resolved against the config file's directory
  nlohmann::json measure;    // loaded measure spec

  std::vector<double> M{2.0, 4.0};
  int engulfing_pairs = 200;
  int max_delta_exponent = 10;
  int search_levels = 20;
  double C0 = 0.0;
  double tail_K_max = 0.0;

  /// "wang(3)", "mu(file)", ...
  std::string selector() const;
  /// Throws ConfigError.
  void validate() const;
  /// Canonical form; hashing uses this.
  nlohmann::json to_json() const;
  /// SHA-256 of the canonical JSON dump.
  std::string hash() const;

  /// Throws ConfigError on syntax errors, unknown keys or invalid values.
  static ExperimentConfig from_yaml(const std::string& text, const std::string& base_dir = ".");
  static ExperimentConfig from_file(const std::string& path);
};

/// Commented YAML file listing every key with its default.
std::string config_template();

}  // namespace malab
