#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cbrw/commands.hpp"
#include "cbrw/config.hpp"
#include "cbrw/errors.hpp"
#include "cbrw/report.hpp"
#include "doctest.h"

using namespace cbrw;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string scratch(const std::string& leaf) {
  const auto dir = std::filesystem::temp_directory_path() / "cbrw_cli_tests";
  std::filesystem::create_directories(dir);
  return (dir / leaf).string();
}

const char* kLazyModel =
    "[model]\n"
    "walk = [[-1, 0.4], [0, 0.2], [1, 0.4]]\n"
    "catalysts = [[0, \"poisson\", 2.0]]\n";

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("config parse fills defaults and reads values") {
  const std::string text = std::string(kLazyModel) +
                           "[experiment]\n"
                           "kind = \"lln\"\n"
                           "n_max = 40\n"
                           "replicas = 100\n"
                           "seed = 7\n";
  ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.kind == RunKind::kLln);
  CHECK(cfg.n_max == 40);
  CHECK(cfg.replicas == 100);
  CHECK(cfg.seed == 7);
  CHECK(cfg.cap == 1e8);
  CHECK(cfg.threads == 1);
  CHECK(cfg.times.empty());
  CHECK(cfg.model.single_catalyst());
  CHECK(cfg.model.walk.steps().size() == 3);
  CHECK(cfg.subsequence_s < 0.0);
}

TEST_CASE("config rejects missing seed, bad values, unknown keys") {
  const std::string base = std::string(kLazyModel) + "[experiment]\n";
  CHECK_THROWS_AS(parse_config_text(base + "kind = \"lln\"\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(base + "kind = \"lln\"\nseed = 1\nreplicas = 0\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(base + "kind = \"lln\"\nseed = 1\nmystery = 2\n"),
      ConfigError);
  CHECK_THROWS_AS(parse_config_text(base + "kind = \"nope\"\nseed = 1\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_text(base + "seed = 1\n"), ConfigError);
  // Walk probabilities must sum to 1; model validation surfaces as a
  // config error.
  CHECK_THROWS_AS(
      parse_config_text("[model]\nwalk = [[-1, 0.5], [1, 0.6]]\n"
                        "catalysts = [[0, \"poisson\", 2.0]]\n"
                        "[experiment]\nkind = \"params\"\n"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(std::string(kLazyModel) +
                        "[experiment]\nkind = \"params\"\nkind = \"lln\"\n"),
      ConfigError);
}

TEST_CASE("params kind needs no seed") {
  ExperimentConfig cfg = parse_config_text(std::string(kLazyModel) +
                                           "[experiment]\nkind = \"params\"\n");
  CHECK(cfg.kind == RunKind::kParams);
  CHECK(cfg.seed == 0);
}

TEST_CASE("config hash ignores formatting but tracks values") {
  const std::string a = std::string(kLazyModel) +
                        "[experiment]\nkind = \"lln\"\nseed = 7\nreplicas = 50\n";
  const std::string b = std::string(kLazyModel) +
                        "# comment\n[experiment]\nreplicas = 50\nseed = 7\n"
                        "kind = \"lln\"\n";
  const std::string c = std::string(kLazyModel) +
                        "[experiment]\nkind = \"lln\"\nseed = 8\nreplicas = 50\n";
  CHECK(config_hash(parse_config_text(a)) == config_hash(parse_config_text(b)));
  CHECK(config_hash(parse_config_text(a)) != config_hash(parse_config_text(c)));
}

TEST_CASE("csv numbers round-trip and encode extinct maxima as empty") {
  CHECK(csv_num(0.1) == "0.1");
  CHECK(csv_num(42.0) == "42");
  CHECK(csv_num(-std::numeric_limits<double>::infinity()) == "");
  CHECK(csv_num(0.7968121300200188) == "0.7968121300200188");
}

TEST_CASE("verify csv carries the pinned columns") {
  std::vector<VerifyRow> rows = {VerifyRow::make("alpha_band", 3, 0.2354, 0.2354, 1e-3),
                                 VerifyRow::make("gap", 0, 1.0, 2.0, 0.5)};
  const std::string text = verify_csv(rows);
  CHECK(text.find("name,n,lhs,rhs,diff,tolerance,pass/fail\n") == 0);
  CHECK(text.find("alpha_band,3,") != std::string::npos);
  CHECK(text.find(",pass\n") != std::string::npos);
  CHECK(text.find("gap,0,1,2,1,0.5,fail\n") != std::string::npos);
}

TEST_CASE("svg plot is native polyline output") {
  PlotSeries s{"speed", {{1.0, 0.2}, {2.0, 0.25}, {3.0, 0.26}}, "#123456", false};
  const std::string svg = svg_line_plot("t", "x", "y", {s});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("speed") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("params experiment writes a manifest and passes") {
  const std::string out = scratch("params_out");
  std::filesystem::remove_all(out);
  ExperimentConfig cfg = parse_config_text(
      std::string(kLazyModel) + "[experiment]\nkind = \"params\"\nout = \"" +
      out + "\"\n");
  std::ostringstream os;
  CHECK(run_experiment(std::move(cfg), os) == 0);
  const std::string manifest = slurp(out + "/manifest.txt");
  CHECK(manifest.find("config_hash = ") != std::string::npos);
  CHECK(manifest.find("r = ") != std::string::npos);
  CHECK(manifest.find("wall_seconds = ") != std::string::npos);
  CHECK(os.str().find("all checks passed") != std::string::npos);
}

TEST_CASE("reruns are byte-identical across thread counts") {
  auto config_for = [&](const std::string& out, int threads) {
    return std::string(kLazyModel) +
           "[experiment]\nkind = \"lln\"\nn_max = 30\ntimes = [15, 30]\n"
           "replicas = 60\nseed = 99\nthreads = " + std::to_string(threads) +
           "\nout = \"" + out + "\"\n";
  };
  const std::string out1 = scratch("lln_t1");
  const std::string out3 = scratch("lln_t3");
  std::filesystem::remove_all(out1);
  std::filesystem::remove_all(out3);
  std::ostringstream os1, os3;
  run_experiment(parse_config_text(config_for(out1, 1)), os1);
  run_experiment(parse_config_text(config_for(out3, 3)), os3);
  CHECK(slurp(out1 + "/runs.csv") == slurp(out3 + "/runs.csv"));
  CHECK(slurp(out1 + "/summary.csv") == slurp(out3 + "/summary.csv"));
  CHECK(slurp(out1 + "/plots/lln_speed.svg") == slurp(out3 + "/plots/lln_speed.svg"));
  CHECK(slurp(out1 + "/runs.csv").find("replica,n,M_n,eta0,lambda_n,total,survived\n") == 0);
}

TEST_CASE("fluctuation refuses a periodic walk naming the assumption") {
  ExperimentConfig cfg = parse_config_text(
      "[model]\nwalk = [[-1, 0.5], [1, 0.5]]\n"
      "catalysts = [[0, \"poisson\", 1.83]]\n"
      "[experiment]\nkind = \"fluctuation\"\nn_max = 20\nreplicas = 10\n"
      "seed = 1\nout = \"" + scratch("per_out") + "\"\n");
  std::ostringstream os;
  bool threw = false;
  try {
    run_experiment(std::move(cfg), os);
  } catch (const ValidationError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("aperiodic") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("subcommand and config kind must agree") {
  const std::string path = scratch("kind_mismatch.toml");
  write_text_file(path, std::string(kLazyModel) +
                            "[experiment]\nkind = \"params\"\nout = \"" +
                            scratch("mismatch_out") + "\"\n");
  RunOverrides overrides;
  overrides.expect_kind = "lln";
  std::ostringstream os;
  CHECK_THROWS_AS(run_experiment(path, overrides, os), ConfigError);
}

TEST_SUITE_END();
