#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "malab/cli_reports/config.hpp"
#include "malab/cli_reports/runner.hpp"
#include "malab/error.hpp"

using namespace malab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("malab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_radial(const fs::path& out) {
  ExperimentConfig c = ExperimentConfig::from_yaml("grids: [17, 33]\nanalysis:\n  engulfing_pairs: 40\n");
  c.output = out.string();
  return c;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Unsupported;
}

}  // namespace

TEST_SUITE("cli_reports") {
  TEST_CASE("YAML values override defaults and the rest stay put") {
    const auto c = ExperimentConfig::from_yaml(
        "problem: wang\n"
        "grids: [33, 65, 129]\n"
        "seed: 7\n"
        "wang:\n  alpha: 9\n"
        "analysis:\n  M: [2, 4, 8]\n");
    CHECK(c.problem == Problem::Wang);
    CHECK(c.grids == std::vector<int>{33, 65, 129});
    CHECK(c.seed == 7);
    CHECK(c.wang_alpha == 9.0);
    CHECK(c.M == std::vector<double>{2, 4, 8});
    CHECK(c.wang_level == 1.0 / 16);
    CHECK(c.solver.tol == 1e-8);
    CHECK(c.selector() == "wang(9)");
  }

  TEST_CASE("malformed configurations are rejected") {
    CHECK(code_of([] { ExperimentConfig::from_yaml("grids: [65]\n"); }) == ErrorCode::ConfigError);
    CHECK_NOTHROW(ExperimentConfig::from_yaml("grids: [65]\nrefinement_check: false\n"));
    CHECK(code_of([] { ExperimentConfig::from_yaml("colour: blue\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("solver:\n  tolerance: 1\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("grids: [64, 128]\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("grids: [129, 65]\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("seed: [1, 2]\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("grids: [17, 33\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("problem: mu\n"); }) == ErrorCode::ConfigError);
    CHECK(code_of([] { ExperimentConfig::from_yaml("problem: quartic\n"); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("the generated template parses to the defaults") {
    const auto c = ExperimentConfig::from_yaml(config_template());
    CHECK(c.to_json() == ExperimentConfig{}.to_json());
  }

  TEST_CASE("config hash ignores the output directory and tracks the seed") {
    ExperimentConfig a, b;
    b.output = "elsewhere";
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 64);
    b.seed = 2;
    CHECK(a.hash() != b.hash());
  }

  TEST_CASE("measure files resolve against the config directory") {
    const fs::path dir = scratch("measure");
    std::ofstream(dir / "x1.json") << R"({"dim": 2, "terms": [{"polynomial": [{"c": 1, "powers": [1, 0]}], "exponent": 1}]})";
    std::ofstream(dir / "exp.yaml") << "problem: mu\nmu:\n  spec: x1.json\n";
    const auto c = ExperimentConfig::from_file((dir / "exp.yaml").string());
    CHECK(c.problem == Problem::Mu);
    CHECK(c.measure.at("dim") == 2);
    std::ofstream(dir / "bad.yaml") << "problem: mu\nmu:\n  spec: missing.json\n";
    CHECK(code_of([&] { ExperimentConfig::from_file((dir / "bad.yaml").string()); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("radial run lists solve reports and a stable epsilon table") {
    const fs::path out = scratch("radial");
    const RunManifest m = run(small_radial(out));
    for (const char* f : {"solve_17.json", "solve_33.json", "delta.json", "cover.json", "cover.svg", "decay_M2.json",
                          "decay_M4.csv", "tails.json", "tails_33.svg", "epsilon.json", "epsilon.csv", "summary.json"}) {
      CAPTURE(f);
      CHECK(std::find(m.files.begin(), m.files.end(), f) != m.files.end());
      CHECK(fs::exists(out / f));
    }
    CHECK(fs::exists(out / "manifest.json"));
    CHECK(m.timings.size() == default_stages(small_radial(out)).size());
    const auto eps = nlohmann::json::parse(slurp(out / "epsilon.json"));
    CHECK(eps.at("table").size() == 6);
    for (const auto& row : eps.at("table")) CHECK(row.at("stable").get<bool>());
    CHECK(eps.at("estimate").is_null());  // two grids only
    const auto solve = nlohmann::json::parse(slurp(out / "solve_33.json"));
    CHECK(solve.at("max_error").get<double>() < 1e-10);
  }

  TEST_CASE("reruns are byte identical and compare reports zero differences") {
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const RunManifest ma = run(small_radial(a));
    run(small_radial(b));
    for (const auto& f : ma.files) {
      CAPTURE(f);
      CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto diff = compare(a.string(), b.string());
    CHECK(diff.at("identical").get<bool>());
    CHECK(diff.at("max_relative_difference").get<double>() == 0.0);
    CHECK(diff.at("flags_agree").get<bool>());
    CHECK(!diff.at("ledger").empty());
  }

  TEST_CASE("wall times appear only in the manifest") {
    const fs::path out = scratch("timing");
    const RunManifest m = run(small_radial(out));
    for (const auto& f : m.files) {
      CAPTURE(f);
      const std::string text = slurp(out / f);
      CHECK(text.find("seconds") == std::string::npos);
      CHECK(text.find("wall_time") == std::string::npos);
    }
    CHECK(slurp(out / "manifest.json").find("seconds") != std::string::npos);
  }

  TEST_CASE("manifest round trip") {
    const fs::path out = scratch("manifest");
    const RunManifest m = run(small_radial(out), {Stage::Solve});
    const RunManifest back = RunManifest::load(out.string());
    CHECK(back.to_json() == m.to_json());
    CHECK(RunManifest::load((out / "manifest.json").string()).config_hash == m.config_hash);
    CHECK(back.version == kArtifactVersion);
    CHECK(back.files == std::vector<std::string>{"solve_17.json", "solve_33.json", "summary.json"});
  }

  TEST_CASE("compare refuses different problems") {
    const fs::path a = scratch("cmp_a"), b = scratch("cmp_b");
    run(small_radial(a), {Stage::Solve});
    ExperimentConfig c = small_radial(b);
    c.problem = Problem::Oscillatory;
    run(c, {Stage::Solve});
    CHECK(code_of([&] { compare(a.string(), b.string()); }) == ErrorCode::IncompatibleManifests);
  }

  TEST_CASE("compare reports relative differences between seeds") {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    ExperimentConfig c = small_radial(a);
    run(c, {Stage::Sections});
    c.output = b.string();
    c.seed = 99;
    run(c, {Stage::Sections});
    const auto diff = compare(a.string(), b.string());
    CHECK(!diff.at("identical").get<bool>());
    CHECK(diff.at("max_relative_difference").get<double>() >= 0.0);
    CHECK(diff.at("files").contains("delta.json"));
  }

  TEST_CASE("stage errors carry the stage tag") {
    ExperimentConfig c = small_radial(scratch("failure"));
    c.problem = Problem::Oscillatory;
    c.solver.max_iterations = 1;
    try {
      run(c, {Stage::Solve});
      FAIL("expected a stage failure");
    } catch (const StageFailure& e) {
      CHECK(e.stage() == Stage::Solve);
      CHECK(e.code() == ErrorCode::NonConvergence);
      CHECK(std::string(e.what()).rfind("solve: ", 0) == 0);
    }
    ExperimentConfig r = small_radial(scratch("failure_mu"));
    CHECK(code_of([&] { run(r, {Stage::MuCheck}); }) == ErrorCode::ConfigError);
  }

  TEST_CASE("wang run emits a tail plot with slope near -2") {
    const fs::path out = scratch("wang");
    ExperimentConfig c = ExperimentConfig::from_yaml("problem: wang\ngrids: [513, 1025]\n");
    c.output = out.string();
    const RunManifest m = run(c, {Stage::Wang, Stage::Tails});
    CHECK(std::find(m.files.begin(), m.files.end(), "tails_1025.svg") != m.files.end());
    CHECK(std::find(m.files.begin(), m.files.end(), "wang.json") != m.files.end());
    const auto tails = nlohmann::json::parse(slurp(out / "tails.json"));
    CHECK(tails.at("1025").at("slope").get<double>() == doctest::Approx(-2.0).epsilon(0.1));
  }
}
