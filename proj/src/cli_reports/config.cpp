#include "malab/cli_reports/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "malab/degenerate_mu/measure.hpp"
#include "malab/error.hpp"

namespace malab {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

json scalar_json(const YAML::Node& n) {
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(s, &pos);
    if (pos == s.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(s, &pos);
    if (pos == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Map: {
      json j = json::object();
      for (const auto& kv : n) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      json j = json::array();
      for (const auto& v : n) j.push_back(yaml_to_json(v));
      return j;
    }
    case YAML::NodeType::Scalar:
      return scalar_json(n);
    default:
      return nullptr;
  }
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be a mapping");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) bad("unknown key '" + k + "' in " + where);
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key + " has the wrong type");
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_string(Problem p) {
  switch (p) {
    case Problem::Radial: return "radial";
    case Problem::Oscillatory: return "oscillatory";
    case Problem::Wang: return "wang";
    case Problem::Mu: return "mu";
  }
  return "";
}

std::string ExperimentConfig::selector() const {
  std::ostringstream os;
  os << to_string(problem);
  if (problem == Problem::Wang) os << '(' << wang_alpha << ')';
  if (problem == Problem::Mu) os << '(' << measure.dump() << ')';
  return os.str();
}

void ExperimentConfig::validate() const {
  if (grids.empty()) bad("at least one grid size is required");
  for (int g : grids)
    if (g < 9 || g % 2 == 0) bad("grid sizes must be odd and at least 9, got " + std::to_string(g));
  for (std::size_t k = 1; k < grids.size(); ++k)
    if (grids[k] <= grids[k - 1]) bad("grid sizes must increase");
  if (refinement_check && grids.size() < 2) bad("a refinement check needs at least two grid sizes");
  if (domain != "ball" && domain != "square") bad("domain must be 'ball' or 'square'");
  if (!(solver.tol > 0.0)) bad("solver.tol must be positive");
  if (solver.stencil_width < 1) bad("solver.stencil_width must be at least 1");
  if (solver.max_iterations < 1) bad("solver.max_iterations must be at least 1");
  if (!(oscillation_amplitude >= 0.0 && oscillation_amplitude < 1.0))
    bad("oscillatory.amplitude must lie in [0, 1)");
  if (oscillation_cells < 1) bad("oscillatory.cells must be at least 1");
  if (!(wang_alpha >= 1.0)) bad("wang.alpha must be at least 1");
  if (!(wang_level > 0.0)) bad("wang.level must be positive");
  if (wang_half_widths.size() != 2 || !(wang_half_widths[0] > 0.0) || !(wang_half_widths[1] > 0.0))
    bad("wang.half_widths needs two positive entries");
  if (problem == Problem::Mu && measure.is_null()) bad("problem 'mu' needs mu.spec");
  if (M.empty()) bad("analysis.M needs at least one value");
  for (double m : M)
    if (!(m > 1.0)) bad("analysis.M values must exceed 1");
  if (engulfing_pairs < 1) bad("analysis.engulfing_pairs must be positive");
  if (max_delta_exponent < 1) bad("analysis.max_delta_exponent must be positive");
  if (search_levels < 2) bad("analysis.search_levels must be at least 2");
  if (C0 < 0.0) bad("analysis.C0 must be nonnegative");
  if (!measure.is_null()) MeasureSpec::from_json(measure);
}

nlohmann::json ExperimentConfig::to_json() const {
  json j = {{"problem", to_string(problem)},
            {"domain", domain},
            {"grids", grids},
            {"refinement_check", refinement_check},
            {"seed", seed},
            {"output", output},
            {"solver",
             {{"tol", solver.tol}, {"stencil_width", solver.stencil_width}, {"max_iterations", solver.max_iterations}}},
            {"oscillatory", {{"amplitude", oscillation_amplitude}, {"cells", oscillation_cells}}},
            {"wang", {{"alpha", wang_alpha}, {"level", wang_level}, {"half_widths", wang_half_widths}}},
            {"analysis",
             {{"M", M},
              {"engulfing_pairs", engulfing_pairs},
              {"max_delta_exponent", max_delta_exponent},
              {"search_levels", search_levels},
              {"C0", C0},
              {"tail_K_max", tail_K_max}}}};
  if (!measure.is_null()) j["mu"] = {{"spec", measure}};
  return j;
}

std::string ExperimentConfig::hash() const {
  // The output directory does not change results.
  json j = to_json();
  j.erase("output");
  const std::string text = j.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

ExperimentConfig ExperimentConfig::from_yaml(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    bad(std::string("YAML: ") + e.what());
  }
  if (j.is_null()) j = json::object();
  only_keys(j, "config",
            {"problem", "domain", "grids", "refinement_check", "seed", "output", "solver", "oscillatory", "wang",
             "mu", "analysis"});
  ExperimentConfig c;
  const std::string problem = get<std::string>(j, "problem", "config", "radial");
  if (problem == "radial") c.problem = Problem::Radial;
  else if (problem == "oscillatory") c.problem = Problem::Oscillatory;
  else if (problem == "wang") c.problem = Problem::Wang;
  else if (problem == "mu") c.problem = Problem::Mu;
  else bad("unknown problem '" + problem + "'");
  c.domain = get<std::string>(j, "domain", "config", c.domain);
  c.grids = get<std::vector<int>>(j, "grids", "config", c.grids);
  c.refinement_check = get<bool>(j, "refinement_check", "config", c.refinement_check);
  const long long seed = get<long long>(j, "seed", "config", 1);
  if (seed < 0) bad("seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.output = get<std::string>(j, "output", "config", c.output);

  if (j.contains("solver")) {
    const json& s = j["solver"];
    only_keys(s, "solver", {"tol", "stencil_width", "max_iterations"});
    c.solver.tol = get<double>(s, "tol", "solver", c.solver.tol);
    c.solver.stencil_width = get<int>(s, "stencil_width", "solver", c.solver.stencil_width);
    c.solver.max_iterations = get<int>(s, "max_iterations", "solver", c.solver.max_iterations);
  }
  if (j.contains("oscillatory")) {
    const json& s = j["oscillatory"];
    only_keys(s, "oscillatory", {"amplitude", "cells"});
    c.oscillation_amplitude = get<double>(s, "amplitude", "oscillatory", c.oscillation_amplitude);
    c.oscillation_cells = get<int>(s, "cells", "oscillatory", c.oscillation_cells);
  }
  if (j.contains("wang")) {
    const json& s = j["wang"];
    only_keys(s, "wang", {"alpha", "level", "half_widths"});
    c.wang_alpha = get<double>(s, "alpha", "wang", c.wang_alpha);
    c.wang_level = get<double>(s, "level", "wang", c.wang_level);
    c.wang_half_widths = get<std::vector<double>>(s, "half_widths", "wang", c.wang_half_widths);
  }
  if (j.contains("mu")) {
    const json& s = j["mu"];
    only_keys(s, "mu", {"spec"});
    const std::string file = get<std::string>(s, "spec", "mu", "");
    if (file.empty()) bad("mu.spec must name a measure file");
    const std::filesystem::path p = std::filesystem::path(base_dir) / file;
    c.measure_file = p.string();
    try {
      c.measure = json::parse(read_text(c.measure_file));
    } catch (const json::exception& e) {
      bad("measure file " + c.measure_file + ": " + e.what());
    }
  }
  if (j.contains("analysis")) {
    const json& s = j["analysis"];
    only_keys(s, "analysis", {"M", "engulfing_pairs", "max_delta_exponent", "search_levels", "C0", "tail_K_max"});
    c.M = get<std::vector<double>>(s, "M", "analysis", c.M);
    c.engulfing_pairs = get<int>(s, "engulfing_pairs", "analysis", c.engulfing_pairs);
    c.max_delta_exponent = get<int>(s, "max_delta_exponent", "analysis", c.max_delta_exponent);
    c.search_levels = get<int>(s, "search_levels", "analysis", c.search_levels);
    c.C0 = get<double>(s, "C0", "analysis", c.C0);
    c.tail_K_max = get<double>(s, "tail_K_max", "analysis", c.tail_K_max);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  const std::filesystem::path p(path);
  return from_yaml(read_text(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

std::string config_template() {
  return R"(# malab experiment configuration. Every key is optional; the values shown are the defaults.

problem: radial          # radial | oscillatory | wang | mu
domain: ball             # ball | square (ignored for wang, which uses a box)
grids: [65, 129]         # nodes per axis for the refinement family, coarse to fine, odd
refinement_check: true   # requires at least two grids
seed: 1                  # drives every sampler; fixed seed means identical outputs
output: malab_out        # directory for reports

solver:
  tol: 1.0e-8            # max residual of the discrete equation
  stencil_width: 2       # 1: 4 directions, 2: 8 directions, 3: 16 directions
  max_iterations: 100

oscillatory:             # f = 1 + amplitude * sign(sin(pi k x) sin(pi k y))
  amplitude: 0.9
  cells: 4

wang:                    # homogeneous solution u(t x, t^alpha y) = t^(1 + alpha) u(x, y)
  alpha: 3
  level: 0.0625          # analysis region {u < level}
  half_widths: [1.05, 1.0]

# mu:
#   spec: measure.json   # measure document, relative to this file

analysis:
  M: [2, 4]              # level bases for D_k = {|D^2u| >= M^k}
  engulfing_pairs: 200
  max_delta_exponent: 10 # delta searched over 2^-1 .. 2^-max
  search_levels: 20      # dyadic heights tried per section search
  C0: 0                  # 0 selects sqrt(M)
  tail_K_max: 0          # 0 uses the largest resolvable threshold
)";
}

}  // namespace malab
