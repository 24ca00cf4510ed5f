#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "playclone/benchmark.hpp"
#include "playclone/bridge.hpp"

namespace playclone::cli {

// Everything a run can be configured with. Loaded from a flat key=value file
// (section.key = value, '#' comments), then overridden by command-line flags.
struct RunConfig {
  std::filesystem::path data_root = ".";
  std::filesystem::path checkpoint_root;  // default <data_root>/checkpoints
  std::filesystem::path report_root;      // default <data_root>/reports
  std::uint64_t seed = 0;

  sim::SceneConfig scene;
  agents::OracleConfig oracle;
  double collect_minutes = 30.0;
  double collect_episode_minutes = 1.0;
  pipeline::TrainConfig bc;
  pipeline::TrainConfig lfp;
  pipeline::CloneConfig clone;
  int eval_trials = 50;
  pipeline::RolloutConfig rollout;
  bench::SweepSpec sweep;
  bench::BaseConfig sweep_base;
  bridge::ServerConfig serve;

  RunConfig();
  std::filesystem::path checkpoints() const;
  std::filesystem::path reports() const;
};

// The sweep base used by `playclone sweep`: sweep.* keys plus the scene, oracle,
// training, evaluation and rollout settings of the run.
bench::BaseConfig sweep_config(const RunConfig& c);

// Applies one key. Throws Error(InvalidArgument) for unknown keys or bad values.
void set_key(RunConfig& c, const std::string& key, const std::string& value);
void load_config_text(RunConfig& c, const std::string& text);
void load_config_file(RunConfig& c, const std::filesystem::path& path);
std::vector<std::string> config_keys();

// Exit status for a failure of the given kind (0 is success, 2 is a usage error).
int exit_code(ErrorKind kind);
constexpr int kUsageExit = 2;
constexpr int kInternalExit = 70;

// SVG line charts. Each input is (legend label, CSV text). Sweep CSVs are
// summarized per point (mean and standard error across seeds).
std::string render_sweep_svg(const std::vector<std::pair<std::string, std::string>>& inputs,
                             const std::string& title = {});
std::string render_coverage_svg(const std::vector<std::pair<std::string, std::string>>& inputs,
                                const std::string& title = {});

// Runs one command line (args[0] is the program name). Errors are reported on
// `err` as a single line: error: kind=<kind> code=<n> message="...".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace playclone::cli
