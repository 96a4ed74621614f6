#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cbrw/model.hpp"

namespace cbrw {

enum class RunKind {
  kParams,
  kLln,
  kFluctuation,
  kVerify,
  kMulticat,
  kExpectation,
};

RunKind parse_run_kind(const std::string& name);
std::string run_kind_name(RunKind kind);

// Declarative experiment description.  Everything an experiment needs lives
// in the file; the seed has no wall-clock fallback, so two runs of the same
// config are the same experiment.
struct ExperimentConfig {
  ModelSpec model;
  RunKind kind = RunKind::kParams;

  int n_max = 100;
  std::vector<int> times;     // recorded generations; empty -> spread to n_max
  long replicas = 1000;
  std::uint64_t seed = 0;
  std::vector<int> n_list;    // exceedance generations; empty -> {n_max}
  std::vector<double> y_grid; // empty -> {0, 1, 2, 3}
  int k_lambda = 0;           // martingale read-off time; 0 -> n/2
  double cap = 1e8;
  int threads = 1;
  std::string out_dir = "out";

  // Subsequence targeting for the integer-gap pmf table: pick n from n_list
  // with fractional part of alpha n within tol of s.  Disabled when s < 0.
  double subsequence_s = -1.0;
  double subsequence_tol = 0.02;
  int pmf_y_min = -2;
  int pmf_y_max = 8;

  explicit ExperimentConfig(ModelSpec m) : model(std::move(m)) {}
};

// Parses the key-value config format (TOML-style sections, scalars, nested
// arrays, # comments).  Throws ConfigError on syntax errors, unknown or
// missing keys, and values that fail model validation.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Stable content hash of the parsed configuration (order-insensitive for
// key placement, sensitive to every value).
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace cbrw
