// Command-line experiment runner for the distributed passive-radar
// simulator. One subcommand per analysis:
//
//   pradar validate-config   --config cfg.json [--out dir]
//   pradar validate-moments  --config cfg.json [--trials n]
//   pradar design-weights    --config cfg.json
//   pradar roc               --config cfg.json [--trials n]
//   pradar reproduce         --config cfg.json --figure 2|3 [--trials n]
//
// Exit status: 0 on success, 1 when a check performed by the run fails,
// 2 on configuration or usage errors.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pradar/experiment.hpp"
#include "pradar/runner.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  pradar::RunOptions options;
};

void add_common_options(CLI::App* cmd, CliArgs& args, std::optional<long>& trials,
                        std::optional<std::uint64_t>& seed) {
  cmd->add_option("--config", args.config_path, "Path to the experiment configuration (JSON)")
      ->required();
  cmd->add_option("--out", args.options.out_dir, "Output directory for artifacts");
  cmd->add_option("--seed", seed, "Override the master RNG seed from the config");
  cmd->add_option("--trials", trials, "Override the per-hypothesis trial count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed passive-radar collaboration simulator"};
  app.require_subcommand(1);

  CliArgs args;
  std::optional<long> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> figure;

  CLI::App* validate_config = app.add_subcommand(
      "validate-config", "Check the configuration against all model invariants");
  add_common_options(validate_config, args, trials, seed);

  CLI::App* validate_moments = app.add_subcommand(
      "validate-moments", "Closed-form CC moments vs Monte Carlo estimates");
  add_common_options(validate_moments, args, trials, seed);

  CLI::App* design = app.add_subcommand(
      "design-weights", "Solve for the optimal collaboration weights");
  add_common_options(design, args, trials, seed);

  CLI::App* roc = app.add_subcommand(
      "roc", "Estimate the detector ROC for the designed collaboration (plus baselines)");
  add_common_options(roc, args, trials, seed);

  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "Re-run a figure's experiment grid and its qualitative checks");
  add_common_options(reproduce, args, trials, seed);
  reproduce->add_option("--figure", figure, "Figure to reproduce (2 or 3)")
      ->check(CLI::IsMember({2, 3}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    pradar::ExperimentSpec spec = pradar::load_spec(args.config_path);
    args.options.seed = seed;
    args.options.n_trials = trials;
    args.options.figure = figure;

    using Mode = pradar::RunDirective::Mode;
    if (validate_config->parsed()) spec.run.mode = Mode::kValidateConfig;
    if (validate_moments->parsed()) spec.run.mode = Mode::kValidateMoments;
    if (design->parsed()) spec.run.mode = Mode::kDesignWeights;
    if (roc->parsed()) spec.run.mode = Mode::kRoc;
    if (reproduce->parsed()) spec.run.mode = Mode::kReproduce;

    return pradar::run_experiment(std::move(spec), args.options);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
