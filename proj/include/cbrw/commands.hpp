#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "cbrw/config.hpp"

namespace cbrw {

struct RunOverrides {
  std::optional<std::string> expect_kind;  // CLI subcommand; must match config
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

// Loads the config, applies overrides, runs the experiment, writes its
// artifacts.  Exit code: 0 when every embedded check passed, 1 when one
// failed, 2 on config or precondition errors (the violated assumption is
// reported on the stream).
int run_experiment(const std::string& config_path, const RunOverrides& overrides,
                   std::ostream& os);

int run_experiment(ExperimentConfig cfg, std::ostream& os);

}  // namespace cbrw
