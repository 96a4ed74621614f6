#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cbrw/commands.hpp"
#include "cbrw/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"catalytic branching random walk experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  long long seed = -1;
  std::string out_dir;
  int threads = 0;

  const char* kinds[] = {"params",  "lln",      "fluctuation",
                         "verify",  "multicat", "expectation"};
  for (const char* kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind);
    sub->add_option("--config", config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out_dir, "override the output directory");
    sub->add_option("--threads", threads, "override the worker count");
  }

  CLI11_PARSE(app, argc, argv);

  cbrw::RunOverrides overrides;
  overrides.expect_kind = app.get_subcommands().front()->get_name();
  if (seed >= 0) overrides.seed = static_cast<std::uint64_t>(seed);
  if (!out_dir.empty()) overrides.out_dir = out_dir;
  if (threads > 0) overrides.threads = threads;

  try {
    return cbrw::run_experiment(config_path, overrides, std::cout);
  } catch (const cbrw::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
