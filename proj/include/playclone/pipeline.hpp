#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "playclone/playdata.hpp"
#include "playclone/seqnet.hpp"
#include "playclone/sim.hpp"

namespace playclone::pipeline {

using sim::Action;
using sim::EnvState;
using sim::SceneConfig;

enum class PolicyKind { PlayBc, Lfp };

struct TrainConfig {
  seqnet::NetSpec spec;  // input_width is overwritten: 19 for Play-BC, 38 for LfP
  int batch = 32;
  long steps = 2000;
  seqnet::AdamConfig adam;
  double clip_norm = 10.0;
  seqnet::Precision precision = seqnet::Precision::Single;
  std::uint64_t seed = 0;
  // Relative window-sampling weight per source. Empty: proportional to eligible starts.
  std::map<data::Source, double> source_weights;
};

struct LogRow {
  long step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

// A trained (or freshly initialized) policy together with the statistics that
// define its observation normalization and action bins.
struct Policy {
  PolicyKind kind = PolicyKind::PlayBc;
  seqnet::PolicyParams params{seqnet::NetSpec{}};
  data::NormStats stats;
};

struct TrainResult {
  Policy policy;
  std::vector<LogRow> log;
  double final_loss = 0.0;  // mean loss over the last min(100, steps) steps; NaN if steps == 0
};

// Pure behavioral cloning pi(a_t | s_t) on play windows. stats default to the dataset's own.
TrainResult train_play_bc(const data::Dataset& play, const TrainConfig& cfg,
                          const data::NormStats* stats = nullptr);
// Goal-conditioned pi(a_t | s_t, s_g) on hindsight-relabeled windows.
TrainResult train_lfp(const data::Dataset& combined, const TrainConfig& cfg,
                      const data::NormStats* stats = nullptr);

std::string format_train_log(const std::vector<LogRow>& log);

// Checkpoint (binary, seqnet format) plus a key=value sidecar at <path>.meta.
void save_policy(const std::filesystem::path& path, const Policy& p, const TrainConfig& cfg, double final_loss);
Policy load_policy(const std::filesystem::path& path);

// Stateful recurrent actor over a policy: normalization, sampling, dequantization.
// With context_ticks > 0 the hidden state is zeroed every context_ticks actions.
class PolicyRunner {
 public:
  PolicyRunner(const Policy& p, double temperature, bool greedy, int context_ticks = 0);
  void reset(std::uint64_t seed);
  // goal must be given iff the policy is goal-conditioned.
  Action act(const EnvState& s, const EnvState* goal);

 private:
  const Policy* policy_;
  double temperature_;
  bool greedy_;
  data::ObsNormalizer norm_;
  data::ActionQuantizer quant_;
  int context_ticks_;
  long ticks_ = 0;
  seqnet::Hidden hidden_;
  Eigen::MatrixXd x_;
  Rng rng_;
};

struct CloneConfig {
  std::size_t episodes = 0;
  double minutes = 1.0;
  double temperature = 1.0;
  bool greedy = false;
  int context_ticks = 0;
  std::uint64_t seed = 0;
  std::string created;  // header timestamp; empty means now
};

// Unrolls Play-BC from uniformly drawn frames of `source`, zero hidden state per episode.
data::Dataset generate_cloned_play(const Policy& bc, const SceneConfig& scene, const data::Dataset& source,
                                   const CloneConfig& cfg);

struct RolloutConfig {
  double temperature = 0.3;
  bool greedy = false;
  int context_ticks = 0;
  std::uint64_t seed = 0;
};

// Full trajectory of budget + 1 states starting at `initial`.
std::vector<EnvState> rollout_goal(const Policy& lfp, const SceneConfig& scene, const EnvState& initial,
                                   const EnvState& goal, int budget, const RolloutConfig& cfg);

}  // namespace playclone::pipeline
