#include <cmath>
#include <sstream>

#include "playclone/agents.hpp"

namespace playclone::agents {

Oracle::Oracle(const SceneConfig& cfg, OracleConfig oc) : cfg_(&cfg), oc_(oc), rng_(oc.seed) {}

void Oracle::switch_primitive(const EnvState& s) {
  Primitive p = Primitive::Wander;
  if (uniform(rng_, 0.0, 1.0) >= oc_.wander_prob) {
    p = all_primitives()[std::uniform_int_distribution<int>(1, kNumPrimitives - 1)(rng_)];
  }
  current_ = p;
  script_ = make_primitive(*cfg_, p, s, rng_);
  ticks_in_primitive_ = 0;
  log_.push_back({tick_, p});
}

Action Oracle::act(const EnvState& s) {
  if (!started_ || script_.done() || ticks_in_primitive_ >= oc_.primitive_tick_limit) {
    switch_primitive(s);
    started_ = true;
  }
  Action a = script_.act(*cfg_, s, oc_.gains);
  ++ticks_in_primitive_;
  ++tick_;
  if (oc_.action_noise > 0.0) {
    const auto bounds = cfg_->action_bounds();
    sim::ActVec v = a.flat();
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < sim::kActDim; ++i) v[i] += oc_.action_noise * bounds[i].hi * n(rng_);
    a = sim::clamp_action(*cfg_, Action::from_flat(v));
  }
  return a;
}

RandomPolicyStats random_stats_from(const data::NormStats& s) {
  RandomPolicyStats r;
  for (int d = 0; d < sim::kActDim; ++d) {
    const int k = sim::kObsDim + d;
    r.mean[d] = s.mean[k];
    r.std[d] = s.std[k];
    r.clip_low[d] = s.min[k];
    r.clip_high[d] = s.max[k];
  }
  return r;
}

void validate(const RandomPolicyStats& st) {
  for (int d = 0; d < sim::kActDim; ++d) {
    if (!(st.clip_low[d] <= st.mean[d] && st.mean[d] <= st.clip_high[d]) || !(st.std[d] >= 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "random policy stats invalid in action dimension " + std::to_string(d));
    }
  }
}

Action random_act(const RandomPolicyStats& st, Rng& rng) {
  sim::ActVec v{};
  std::normal_distribution<double> n(0.0, 1.0);
  for (int d = 0; d < sim::kActDim; ++d) {
    v[d] = std::clamp(st.mean[d] + st.std[d] * n(rng), st.clip_low[d], st.clip_high[d]);
  }
  return Action::from_flat(v);
}

CollectResult collect_play(const SceneConfig& cfg, const CollectConfig& cc) {
  if (!(cc.minutes > 0.0) || !(cc.episode_minutes > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "collect: minutes and episode_minutes must be > 0");
  }
  if (cc.policy == PlayPolicy::Random) validate(cc.random);
  const auto total = static_cast<std::size_t>(std::llround(cc.minutes * 60.0 * cfg.control_hz));
  const auto per_episode = static_cast<std::size_t>(std::llround(cc.episode_minutes * 60.0 * cfg.control_hz));
  const auto n_episodes = static_cast<std::size_t>(std::ceil(cc.minutes / cc.episode_minutes - 1e-9));
  const std::string created = cc.created.empty() ? data::now_timestamp() : cc.created;

  CollectResult out;
  sim::Simulator env(cfg);
  std::size_t remaining = total;
  for (std::size_t i = 0; i < n_episodes && remaining > 0; ++i) {
    const std::uint64_t seed_i = mix_seed(cc.seed, i);
    const std::size_t n = i + 1 == n_episodes ? remaining : std::min(per_episode, remaining);
    remaining -= n;

    data::Episode ep;
    ep.header.source = cc.policy == PlayPolicy::Oracle ? data::Source::Oracle : data::Source::Random;
    ep.header.seed = seed_i;
    ep.header.hz = cfg.control_hz;
    ep.header.created = created;
    ep.frames.reserve(n);

    env.reset(seed_i);
    OracleConfig oc = cc.oracle;
    oc.seed = mix_seed(seed_i, 1);
    Oracle oracle(cfg, oc);
    Rng rng(mix_seed(seed_i, 2));
    for (std::size_t t = 0; t < n; ++t) {
      const EnvState& s = env.observe();
      const Action a = cc.policy == PlayPolicy::Oracle ? oracle.act(s) : random_act(cc.random, rng);
      data::Frame f;
      f.tick = static_cast<std::int64_t>(t);
      f.obs = s.flat();
      f.act = sim::clamp_action(cfg, a).flat();
      ep.frames.push_back(f);
      env.step(a);
    }
    out.dataset.episodes.push_back(std::move(ep));
    if (cc.policy == PlayPolicy::Oracle) out.primitive_logs.push_back(oracle.log());
  }
  return out;
}

std::string format_primitive_log(const std::vector<PrimitiveLogEntry>& log) {
  std::ostringstream os;
  for (const auto& e : log) os << e.tick << ' ' << primitive_name(e.primitive) << '\n';
  return os.str();
}

}  // namespace playclone::agents
