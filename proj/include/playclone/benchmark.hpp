#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "playclone/agents.hpp"
#include "playclone/pipeline.hpp"
#include "playclone/tasks.hpp"

namespace playclone::bench {

using sim::EnvState;
using sim::SceneConfig;

// Anything that can be asked to reach a goal state, one tick at a time.
class GoalActor {
 public:
  virtual ~GoalActor() = default;
  virtual void reset(const sim::TaskInstance& inst, std::uint64_t seed) = 0;
  virtual sim::Action act(const EnvState& s, const EnvState& goal) = 0;
};

class LfpActor : public GoalActor {
 public:
  LfpActor(const pipeline::Policy& lfp, const pipeline::RolloutConfig& cfg);
  void reset(const sim::TaskInstance& inst, std::uint64_t seed) override;
  sim::Action act(const EnvState& s, const EnvState& goal) override;

 private:
  pipeline::PolicyRunner runner_;
};

// Scripted per-task expert; ignores the goal state.
class ExpertActor : public GoalActor {
 public:
  explicit ExpertActor(const SceneConfig& scene) : scene_(scene) {}
  void reset(const sim::TaskInstance& inst, std::uint64_t seed) override;
  sim::Action act(const EnvState& s, const EnvState& goal) override;

 private:
  SceneConfig scene_;
  std::unique_ptr<agents::TaskExpert> expert_;
};

class RandomActor : public GoalActor {
 public:
  explicit RandomActor(const agents::RandomPolicyStats& stats) : stats_(stats) {}
  void reset(const sim::TaskInstance& inst, std::uint64_t seed) override;
  sim::Action act(const EnvState& s, const EnvState& goal) override;

 private:
  agents::RandomPolicyStats stats_;
  Rng rng_;
};

struct TaskResult {
  sim::TaskId task{};
  int trials = 0;
  int successes = 0;
  double rate() const { return trials > 0 ? static_cast<double>(successes) / trials : 0.0; }
};

struct EvalReport {
  std::vector<TaskResult> tasks;  // in benchmark order
  double average = 0.0;           // mean of per-task rates
  double std_error = 0.0;         // binomial standard error of the average
  std::string fingerprint;
  std::vector<std::uint64_t> seeds;
};

// Trial i of task t uses instance seed mix_seed(seed, 1000 * t + i).
EvalReport run_eval(const SceneConfig& scene, GoalActor& actor, int trials_per_task, std::uint64_t seed,
                    const std::string& fingerprint = "none");
EvalReport run_eval(const pipeline::Policy& lfp, const SceneConfig& scene, int trials_per_task, std::uint64_t seed,
                    const pipeline::RolloutConfig& rollout = {});

std::string policy_fingerprint(const pipeline::Policy& p, const pipeline::RolloutConfig& rollout, int trials,
                               std::uint64_t seed);
std::string format_eval_csv(const EvalReport& r);

// ---- sweeps ------------------------------------------------------------------

enum class SweepKind { DataQuantity, Capacity, CloneLength, RandomBaseline };
std::string_view sweep_name(SweepKind k);
SweepKind parse_sweep(std::string_view name);

struct Capacity {
  int layers = 2;
  int width = 128;
};

struct SweepSpec {
  SweepKind kind = SweepKind::DataQuantity;
  // data_quantity / random_baseline: extra hours; clone_length: episode seconds; capacity: index into capacities.
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct BaseConfig {
  SceneConfig scene;
  double human_minutes = 30.0;
  agents::OracleConfig oracle;
  pipeline::TrainConfig bc;
  pipeline::TrainConfig lfp;
  double clone_minutes = 1.0;      // clone episode length
  double clone_temperature = 1.0;
  double clone_hours = 10.0;       // used by the capacity and clone_length sweeps
  std::vector<Capacity> capacities{{2, 128}, {1, 128}, {2, 64}, {1, 64}};
  int eval_trials = 50;
  pipeline::RolloutConfig rollout;
  std::string created = "1970-01-01T00:00:00Z";  // fixed header stamp keeps artifacts reproducible
};

SweepSpec default_sweep(SweepKind kind);

struct SweepRow {
  double point = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::size_t train_frames = 0;
  std::size_t unique_bins = 0;  // coverage of the LfP training data
};

// Runs (and caches under cache_dir, if non-empty) every grid point for every seed.
// A failing point becomes a row with ok == false.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const BaseConfig& base,
                                const std::filesystem::path& cache_dir = {});

// point,seed,status,average,std_error,train_frames,unique_bins,<18 task rates>,error
std::string format_sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows);

struct PointSummary {
  double point = 0.0;
  double mean = 0.0;
  double std_error = 0.0;  // across seeds
  int seeds = 0;
};
std::vector<PointSummary> summarize(const std::vector<SweepRow>& rows);

}  // namespace playclone::bench
