#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "playclone/cli.hpp"
#include "playclone/playdata.hpp"

using namespace playclone;
using namespace playclone::cli;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  args.insert(args.begin(), "playclone");
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config text sets keys and rejects unknown ones") {
    RunConfig c;
    load_config_text(c,
                     "# comment\n"
                     "seed = 9\n"
                     "lfp.steps=123\n"
                     "bc.precision=double\n"
                     "lfp.weight.cloned=0.25\n"
                     "sweep.capacities=2x128,1x32\n"
                     "\n");
    CHECK(c.seed == 9);
    CHECK(c.lfp.steps == 123);
    CHECK(c.bc.precision == seqnet::Precision::Double);
    CHECK(c.lfp.source_weights.at(data::Source::Cloned) == 0.25);
    REQUIRE(c.sweep_base.capacities.size() == 2);
    CHECK(c.sweep_base.capacities[1].width == 32);
    CHECK_THROWS_AS(load_config_text(c, "lfp.depth=3\n"), Error);
    CHECK_THROWS_AS(load_config_text(c, "seed\n"), Error);
    CHECK_THROWS_AS(set_key(c, "bc.steps", "many"), Error);
    const auto keys = config_keys();
    CHECK(std::find(keys.begin(), keys.end(), "scene.task_budget") != keys.end());
  }

  TEST_CASE("exit codes follow the error kind") {
    CHECK(exit_code(ErrorKind::InvalidArgument) == 10);
    const Run usage = run_cli({"train-bc"});
    CHECK(usage.code == kUsageExit);
    testutil::TempDir dir("cli_missing");
    const Run missing = run_cli({"--data-root", dir.path().string(), "validate", "nothing_here"});
    CHECK(missing.code == exit_code(ErrorKind::MissingArtifact));
    CHECK(missing.err.find("error: kind=missing_artifact code=") != std::string::npos);
  }

  TEST_CASE("help lists the subcommands and their flags") {
    const Run h = run_cli({"--help"});
    CHECK(h.code == 0);
    for (const char* s : {"collect", "train-bc", "train-lfp", "clone", "eval", "coverage", "sweep", "serve", "validate"}) {
      CHECK(h.out.find(s) != std::string::npos);
    }
    const Run hc = run_cli({"clone", "--help"});
    CHECK(hc.out.find("--temperature") != std::string::npos);
    CHECK(hc.out.find("--episodes") != std::string::npos);
  }

  TEST_CASE("collect, train, clone, coverage and plot through the command line") {
    testutil::TempDir dir("cli_flow");
    testutil::LogCapture logs;
    const std::string root = dir.path().string();
    Run r = run_cli({"--data-root", root, "--seed", "3", "collect", "--minutes", "1", "--created",
                     "2000-01-01T00:00:00Z"});
    REQUIRE(r.code == 0);
    CHECK(run_cli({"--data-root", root, "validate", "play_oracle"}).code == 0);

    r = run_cli({"--data-root", root, "--set", "bc.layers=1", "--set", "bc.width=8", "train-bc", "--data",
                 "play_oracle", "--steps", "5", "--batch", "2"});
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(dir / "checkpoints/play_bc.ckpt"));
    CHECK(slurp(dir / "checkpoints/play_bc.ckpt.log.csv").rfind("step,loss", 0) == 0);

    r = run_cli({"--data-root", root, "clone", "--source", "play_oracle", "--episodes", "10", "--minutes", "1"});
    REQUIRE(r.code == 0);
    CHECK(data::load_dataset(dir / "cloned").total_frames() == 18000);

    r = run_cli({"--data-root", root, "coverage", "--reference", "play_oracle", "--reference-tag", "human",
                 "--segment", "cloned=cloned", "--stride", "600"});
    REQUIRE(r.code == 0);
    const std::string csv = slurp(dir / "reports/coverage.csv");
    CHECK(csv.rfind("frames,hours,cumulative_unique,segment_tag\n", 0) == 0);

    r = run_cli({"--data-root", root, "plot", "--kind", "coverage", "--input", "reports/coverage.csv"});
    REQUIRE(r.code == 0);
    const std::string svg = slurp(dir / "reports/coverage.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
  }

  TEST_CASE("a config file sits below explicit flags") {
    testutil::TempDir dir("cli_config");
    std::ofstream(dir / "run.cfg") << "collect.minutes=2\nseed=4\n";
    testutil::LogCapture logs;
    const Run r = run_cli({"--config", (dir / "run.cfg").string(), "--data-root", dir.path().string(), "collect",
                           "--minutes", "0.5"});
    REQUIRE(r.code == 0);
    CHECK(data::load_dataset(dir / "play_oracle").total_frames() == 900);
  }
}
