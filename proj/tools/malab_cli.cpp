// malab: configuration-driven Monge-Ampere regularity experiments.
//
//   malab run --config exp.yaml
//   malab decay --config exp.yaml --grids 65,129 --out decay_run
//   malab compare run_a run_b
//
// Exit codes: 0 success, 2 stage failure, 3 configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "malab/cli_reports/runner.hpp"
#include "malab/error.hpp"

namespace {

constexpr int kStageFailure = 2;
constexpr int kConfigError = 3;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<int> grids;
  std::optional<double> alpha;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "YAML experiment file (defaults apply when omitted)");
  cmd->add_option("--out", o.out, "output directory, overrides the config");
  cmd->add_option("--seed", o.seed, "sampler seed, overrides the config");
  cmd->add_option("--grids", o.grids, "comma separated nodes per axis, coarse to fine")->delimiter(',');
}

malab::ExperimentConfig load(const Overrides& o) {
  malab::ExperimentConfig c = o.config.empty() ? malab::ExperimentConfig{} : malab::ExperimentConfig::from_file(o.config);
  if (!o.out.empty()) c.output = o.out;
  if (o.seed) c.seed = *o.seed;
  if (!o.grids.empty()) c.grids = o.grids;
  if (o.alpha) {
    c.problem = malab::Problem::Wang;
    c.wang_alpha = *o.alpha;
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for interior W^{2,1+eps} estimates of Monge-Ampere solutions"};
  app.require_subcommand(0, 1);
  bool print_template = false;
  app.add_flag("--template", print_template, "print the commented configuration template and exit");

  Overrides o;
  struct Entry {
    const char* name;
    const char* help;
    std::vector<malab::Stage> stages;  // empty: the problem's default pipeline
  };
  using S = malab::Stage;
  const std::vector<Entry> entries{
      {"solve", "solve the Dirichlet problem on every grid", {S::Solve}},
      {"sections", "estimate the engulfing constant delta", {S::Sections}},
      {"cover", "Vitali cover of the first super level set", {S::Sections, S::Cover}},
      {"decay", "energy decay iteration for each M", {S::Sections, S::Decay}},
      {"tails", "distribution tails |F_K| and the K log K constant", {S::Tails}},
      {"epsilon", "W^{2,1+eps} norms and the refinement estimate of eps", {S::Epsilon}},
      {"wang", "construct the homogeneous singular solution", {S::Wang}},
      {"mu-check", "doubling check and full pipeline for a measure", {S::MuCheck}},
      {"run", "every stage for the configured problem", {}},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> commands;
  for (const Entry& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, o);
    if (std::string(e.name) == "wang") cmd->add_option("--alpha", o.alpha, "exponent alpha, at least 1");
    commands.emplace_back(cmd, &e);
  }
  std::string run_a, run_b, compare_out;
  CLI::App* cmp = app.add_subcommand("compare", "diff two runs with the same problem selector");
  cmp->add_option("A", run_a, "first run directory or manifest")->required();
  cmp->add_option("B", run_b, "second run directory or manifest")->required();
  cmp->add_option("--out", compare_out, "write the diff report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (print_template) {
    std::cout << malab::config_template();
    return 0;
  }
  try {
    if (cmp->parsed()) {
      const std::string report = malab::compare(run_a, run_b).dump(2);
      if (compare_out.empty()) {
        std::cout << report << "\n";
      } else {
        std::ofstream(compare_out) << report << "\n";
      }
      return 0;
    }
    for (const auto& [cmd, entry] : commands) {
      if (!cmd->parsed()) continue;
      const malab::ExperimentConfig c = load(o);
      const auto stages = entry->stages.empty() ? malab::default_stages(c) : entry->stages;
      const malab::RunManifest m = malab::run(c, stages);
      std::cout << "wrote " << m.files.size() << " files to " << c.output << " (config " << m.config_hash.substr(0, 12)
                << ")\n";
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const malab::StageFailure& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kStageFailure;
  } catch (const malab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == malab::ErrorCode::ConfigError ? kConfigError : kStageFailure;
  }
}
