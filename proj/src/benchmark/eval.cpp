#include <cmath>
#include <cstdio>
#include <sstream>

#include "playclone/benchmark.hpp"

namespace playclone::bench {

LfpActor::LfpActor(const pipeline::Policy& lfp, const pipeline::RolloutConfig& cfg)
    : runner_(lfp, cfg.temperature, cfg.greedy, cfg.context_ticks) {
  if (lfp.kind != pipeline::PolicyKind::Lfp) {
    throw Error(ErrorKind::WidthMismatch, "evaluation needs a goal-conditioned (LfP) policy");
  }
}

void LfpActor::reset(const sim::TaskInstance&, std::uint64_t seed) { runner_.reset(seed); }

sim::Action LfpActor::act(const EnvState& s, const EnvState& goal) { return runner_.act(s, &goal); }

void ExpertActor::reset(const sim::TaskInstance& inst, std::uint64_t) {
  expert_ = std::make_unique<agents::TaskExpert>(scene_, inst.task, inst.initial);
}

sim::Action ExpertActor::act(const EnvState& s, const EnvState&) {
  if (!expert_) throw Error(ErrorKind::Uninitialized, "ExpertActor::act before reset");
  return expert_->act(s);
}

void RandomActor::reset(const sim::TaskInstance&, std::uint64_t seed) { rng_.seed(seed); }

sim::Action RandomActor::act(const EnvState&, const EnvState&) { return agents::random_act(stats_, rng_); }

EvalReport run_eval(const SceneConfig& scene, GoalActor& actor, int trials_per_task, std::uint64_t seed,
                    const std::string& fingerprint) {
  if (trials_per_task < 1) throw Error(ErrorKind::InvalidArgument, "eval needs at least one trial per task");
  EvalReport r;
  r.fingerprint = fingerprint;
  r.seeds = {seed};
  sim::Simulator env(scene);
  double var_sum = 0.0;
  for (sim::TaskId task : sim::all_tasks()) {
    TaskResult tr{task, trials_per_task, 0};
    const auto t = static_cast<std::uint64_t>(task);
    for (int i = 0; i < trials_per_task; ++i) {
      const std::uint64_t trial_seed = mix_seed(seed, 1000 * t + static_cast<std::uint64_t>(i));
      const sim::TaskInstance inst = sim::make_task_instance(scene, task, trial_seed);
      actor.reset(inst, mix_seed(trial_seed, 1));
      sim::TaskTracker tracker(scene, task);
      tracker.update(env.reset(inst.initial));
      for (int k = 0; k < inst.budget && !tracker.succeeded(); ++k) {
        tracker.update(env.step(actor.act(env.observe(), inst.goal)));
      }
      tr.successes += tracker.succeeded() ? 1 : 0;
    }
    const double p = tr.rate();
    var_sum += p * (1.0 - p) / tr.trials;
    r.average += p;
    r.tasks.push_back(tr);
  }
  const double n = static_cast<double>(r.tasks.size());
  r.average /= n;
  r.std_error = std::sqrt(var_sum) / n;
  return r;
}

std::string policy_fingerprint(const pipeline::Policy& p, const pipeline::RolloutConfig& rollout, int trials,
                               std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const auto& v = p.params.values();
  mix(v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
  const std::string stats = data::format_norm_stats(p.stats);
  mix(stats.data(), stats.size());
  mix(&rollout.temperature, sizeof rollout.temperature);
  const int greedy = rollout.greedy ? 1 : 0;
  mix(&greedy, sizeof greedy);
  mix(&rollout.context_ticks, sizeof rollout.context_ticks);
  mix(&trials, sizeof trials);
  mix(&seed, sizeof seed);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Early termination on success does not change the outcome: success is the
// predicate holding at any tick within the budget.
EvalReport run_eval(const pipeline::Policy& lfp, const SceneConfig& scene, int trials_per_task, std::uint64_t seed,
                    const pipeline::RolloutConfig& rollout) {
  LfpActor actor(lfp, rollout);
  return run_eval(scene, actor, trials_per_task, seed, policy_fingerprint(lfp, rollout, trials_per_task, seed));
}

std::string format_eval_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "# fingerprint=" << r.fingerprint << '\n';
  os << "# seeds=";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) os << (i ? ";" : "") << r.seeds[i];
  os << '\n';
  os << "task,trials,successes,rate\n";
  char buf[64];
  for (const TaskResult& t : r.tasks) {
    std::snprintf(buf, sizeof buf, "%.6f", t.rate());
    os << sim::task_name(t.task) << ',' << t.trials << ',' << t.successes << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.6f", r.average);
  os << "average,,," << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.6f", r.std_error);
  os << "std_error,,," << buf << '\n';
  return os.str();
}

}  // namespace playclone::bench
