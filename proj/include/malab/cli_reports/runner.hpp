#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malab/cli_reports/config.hpp"
#include "malab/error.hpp"

namespace malab {

inline constexpr const char* kArtifactVersion = "0.1.0";

enum class Stage { Solve, Sections, Cover, Decay, Tails, Epsilon, Wang, MuCheck };

std::string to_string(Stage s);
/// Stages executed by `run` for a problem, in pipeline order.
std::vector<Stage> default_stages(const ExperimentConfig& config);

/// A stage error, tagged with the stage that raised it.
class StageFailure : public std::runtime_error {
 public:
  StageFailure(Stage stage, ErrorCode code, const std::string& what)
      : std::runtime_error(to_string(stage) + ": " + what), stage_(stage), code_(code) {}
  Stage stage() const { return stage_; }
  ErrorCode code() const { return code_; }

 private:
  Stage stage_;
  ErrorCode code_;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Wall times live only in `timings`; every emitted file is reproducible bit for bit.
struct RunManifest {
  std::string config_hash;
  std::string version = kArtifactVersion;
  std::string selector;
  nlohmann::json config;
  std::vector<StageTiming> timings;
  std::vector<std::string> files;  // relative to the output directory

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  /// Accepts a manifest path or the directory holding manifest.json.
  static RunManifest load(const std::string& path);
};

/// Runs the stages and writes reports, tables and plots under config.output.
/// Stage errors are rethrown as StageFailure.
RunManifest run(const ExperimentConfig& config, const std::vector<Stage>& stages);
RunManifest run(const ExperimentConfig& config);

/// Side-by-side constants and relative differences of every numeric value in the
/// reports both runs emitted. Throws IncompatibleManifests for different problems.
nlohmann::json compare(const std::string& run_a, const std::string& run_b);

}  // namespace malab
