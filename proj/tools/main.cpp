#include <iostream>

#include <CLI11.hpp>

#include "sublevel/experiment.hpp"

int main(int argc, char** argv) {
  using namespace sublevel;
  CLI::App app{"Multilevel low-rank Newton experiments"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config (INI)")->required();
    sub->add_option("--out", opts.out_dir, "output directory (overrides [output] dir and $" +
                                               std::string(kOutputDirEnv) + ")");
    sub->add_option("--seed", seed, "master seed (overrides [experiment] seed)");
    sub->add_option("--threads", opts.threads, "worker threads for escape trials")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--json", opts.json, "machine-readable summary on stdout");
  };

  CLI::App* run = app.add_subcommand("run", "run every configured method on the problem");
  add_common(run);
  CLI::App* escape = app.add_subcommand("escape", "escape-rate sweep over N or p");
  add_common(escape);

  VerifyOptions vopts;
  CLI::App* verify = app.add_subcommand("verify", "run the built-in self-check probes");
  verify->add_flag("--json", vopts.json, "machine-readable probe results");
  verify->add_option("--seed", vopts.seed, "probe seed");
  verify->add_flag("--inject-floor-fault", vopts.inject_floor_fault,
                   "negative control: floor the coarse spectrum below sigma_{p+1}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }
  if (run->count("--seed") || escape->count("--seed")) opts.seed = seed;

  if (*run) return cmd_run(opts, std::cout, std::cerr);
  if (*escape) return cmd_escape(opts, std::cout, std::cerr);
  return cmd_verify(vopts, std::cout, std::cerr);
}
