// Command-line front end: rfmag <command> --config <path> [--seed] [--shots] [--out].
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "rfmag/commands.hpp"
#include "rfmag/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> shots;
  std::optional<std::string> out;
  int workers = 0;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "YAML configuration file")->required();
  sub->add_option("--seed", o.seed, "master seed (overrides the config)");
  sub->add_option("--shots", o.shots, "number of Monte-Carlo shots (overrides the config)");
  sub->add_option("--out", o.out, "output directory (overrides the config)");
  sub->add_option("--workers", o.workers, "OpenMP worker threads (0: all available)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-state simulator of a two-cell RF atomic magnetometer"};
  app.set_version_flag("--version", std::string(rfmag::kVersion));
  app.require_subcommand(1);

  CommonOptions opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "run the configured protocol and write shots and a summary"},
      {"sweep", "run entangled and unentangled protocols over the sweep grid"},
      {"pn-limit", "evaluate the projection-noise-limited sensitivity"},
      {"calibrate", "run the two-pulse kappa^2 calibration"},
      {"optimize-mode", "scan the readout mode-function rate for maximum SNR"},
      {"spectrum", "synthesize a photocurrent and write its power spectrum"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    rfmag::SimConfig config = rfmag::load_config(opts.config);
    if (opts.seed) config.master_seed = *opts.seed;
    if (opts.shots) config.n_shots = *opts.shots;
    if (opts.out) config.output_dir = *opts.out;
    config.validate();

    rfmag::CommandContext ctx;
    ctx.workers = opts.workers > 0 ? opts.workers : omp_get_max_threads();
    for (int i = 1; i < argc; ++i) ctx.command_line += (i > 1 ? " " : "") + std::string(argv[i]);

    rfmag::OutputFiles files;
    if (command == "simulate") files = rfmag::cmd_simulate(config, ctx);
    else if (command == "sweep") files = rfmag::cmd_sweep(config, ctx);
    else if (command == "pn-limit") files = rfmag::cmd_pn_limit(config, ctx, std::cout);
    else if (command == "calibrate") files = rfmag::cmd_calibrate(config, ctx);
    else if (command == "optimize-mode") files = rfmag::cmd_optimize_mode(config, ctx);
    else files = rfmag::cmd_spectrum(config, ctx);

    for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
    return 0;
  } catch (const rfmag::ConfigError& e) {
    std::cerr << "rfmag " << command << ": config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "rfmag " << command << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
