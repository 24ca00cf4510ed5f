#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "playclone/pipeline.hpp"

namespace playclone::pipeline {

namespace {

constexpr int kObs = sim::kObsDim;

// Samples windows either proportionally over the whole dataset or with
// per-source weights.
class BatchSampler {
 public:
  BatchSampler(const data::Dataset& d, const std::map<data::Source, double>& weights) : all_(d) {
    if (weights.empty()) return;
    std::map<data::Source, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < d.episodes.size(); ++i) by_source[d.episodes[i].header.source].push_back(i);
    for (auto& [src, ids] : by_source) {
      auto it = weights.find(src);
      const double w = it == weights.end() ? 0.0 : it->second;
      if (!(w >= 0.0)) throw Error(ErrorKind::InvalidArgument, "source weights must be >= 0");
      data::WindowSampler s(d, std::move(ids));
      if (w > 0.0 && s.eligible_starts() > 0) {
        groups_.push_back(std::move(s));
        weights_.push_back(w);
      }
    }
    if (groups_.empty()) throw Error(ErrorKind::NoEligible, "no source with positive weight has eligible windows");
  }

  data::Window sample(Rng& rng) const {
    if (groups_.empty()) return all_.sample(rng);
    std::discrete_distribution<std::size_t> pick(weights_.begin(), weights_.end());
    return groups_[pick(rng)].sample(rng);
  }

 private:
  data::WindowSampler all_;
  std::vector<data::WindowSampler> groups_;
  std::vector<double> weights_;
};

seqnet::Sequence window_sequence(const data::Window& w, const data::ObsNormalizer& norm,
                                 const data::ActionQuantizer& quant, bool goal_conditioned) {
  const auto L = static_cast<Eigen::Index>(w.length());
  seqnet::Sequence seq;
  seq.inputs.resize(goal_conditioned ? 2 * kObs : kObs, L);
  seq.targets.resize(sim::kActDim, L);
  Eigen::VectorXd goal(kObs);
  norm.apply(w.goal, goal.data());
  for (Eigen::Index t = 0; t < L; ++t) {
    const data::Frame& f = w.frames[static_cast<std::size_t>(t)];
    norm.apply(f.obs, seq.inputs.col(t).data());
    if (goal_conditioned) seq.inputs.col(t).tail(kObs) = goal;
    const data::Bins b = quant.quantize(f.act);
    for (int d = 0; d < sim::kActDim; ++d) seq.targets(d, t) = b[d];
  }
  return seq;
}

TrainResult train(const data::Dataset& d, const TrainConfig& cfg, const data::NormStats* stats, PolicyKind kind) {
  if (d.empty()) throw Error(ErrorKind::InvalidArgument, "training dataset is empty");
  if (cfg.batch < 1 || cfg.steps < 0) throw Error(ErrorKind::InvalidArgument, "batch must be >= 1 and steps >= 0");
  const bool goal = kind == PolicyKind::Lfp;
  seqnet::NetSpec spec = cfg.spec;
  spec.input_width = goal ? 2 * kObs : kObs;
  spec.action_dims = sim::kActDim;
  spec.bins = data::kActionBins;

  TrainResult res;
  res.policy.kind = kind;
  res.policy.stats = stats != nullptr ? *stats : data::compute_norm_stats(d);
  Rng init_rng(mix_seed(cfg.seed, 0));
  res.policy.params = seqnet::PolicyParams::random(spec, init_rng);
  res.final_loss = std::nan("");
  if (cfg.steps == 0) return res;

  const data::ObsNormalizer norm(res.policy.stats);
  const data::ActionQuantizer quant(res.policy.stats);
  const BatchSampler sampler(d, cfg.source_weights);
  Rng rng(mix_seed(cfg.seed, 1));
  seqnet::AdamState adam(cfg.adam, res.policy.params.values().size());
  std::vector<seqnet::Sequence> batch(static_cast<std::size_t>(cfg.batch));
  const auto t0 = std::chrono::steady_clock::now();
  double tail_sum = 0.0;
  long tail_n = 0;
  const long tail_from = std::max(0L, cfg.steps - 100);
  for (long step = 0; step < cfg.steps; ++step) {
    for (auto& seq : batch) seq = window_sequence(sampler.sample(rng), norm, quant, goal);
    seqnet::LossGrad lg;
    try {
      lg = seqnet::loss_and_grad(res.policy.params, batch, cfg.precision);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NonFinite) throw;
      throw Error(ErrorKind::Divergence, "training diverged at step " + std::to_string(step) + ": " + e.what());
    }
    const double gn = seqnet::clip_grad_norm(lg.grad, cfg.clip_norm);
    if (!std::isfinite(gn)) {
      throw Error(ErrorKind::Divergence, "training diverged at step " + std::to_string(step) + ": non-finite gradient");
    }
    seqnet::adam_step(res.policy.params.values(), lg.grad, adam);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.log.push_back({step, lg.loss, gn, ms});
    if (step >= tail_from) {
      tail_sum += lg.loss;
      ++tail_n;
    }
  }
  if (!res.policy.params.all_finite()) throw Error(ErrorKind::Divergence, "parameters became non-finite");
  res.final_loss = tail_sum / static_cast<double>(tail_n);
  return res;
}

}  // namespace

TrainResult train_play_bc(const data::Dataset& play, const TrainConfig& cfg, const data::NormStats* stats) {
  return train(play, cfg, stats, PolicyKind::PlayBc);
}

TrainResult train_lfp(const data::Dataset& combined, const TrainConfig& cfg, const data::NormStats* stats) {
  return train(combined, cfg, stats, PolicyKind::Lfp);
}

std::string format_train_log(const std::vector<LogRow>& log) {
  std::ostringstream os;
  os << "step,loss,grad_norm,wallclock_ms\n";
  os.precision(10);
  for (const LogRow& r : log) os << r.step << ',' << r.loss << ',' << r.grad_norm << ',' << r.wall_ms << '\n';
  return os.str();
}

// ---- checkpoints -------------------------------------------------------------

void save_policy(const std::filesystem::path& path, const Policy& p, const TrainConfig& cfg, double final_loss) {
  seqnet::save_params(path, p.params);
  std::filesystem::path meta = path;
  meta += ".meta";
  std::ofstream os(meta, std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + meta.string());
  os.precision(17);
  os << "kind=" << (p.kind == PolicyKind::Lfp ? "lfp" : "play_bc") << '\n';
  os << "final_loss=" << final_loss << '\n';
  os << "train.batch=" << cfg.batch << '\n';
  os << "train.steps=" << cfg.steps << '\n';
  os << "train.lr=" << cfg.adam.lr << '\n';
  os << "train.clip_norm=" << cfg.clip_norm << '\n';
  os << "train.seed=" << cfg.seed << '\n';
  os << "net.layers=" << p.params.spec().layers << '\n';
  os << "net.width=" << p.params.spec().width << '\n';
  os << "net.mixtures=" << p.params.spec().mixtures << '\n';
  os << data::format_norm_stats(p.stats);
  if (!os) throw Error(ErrorKind::Io, "failed writing " + meta.string());
}

Policy load_policy(const std::filesystem::path& path) {
  Policy p;
  p.params = seqnet::load_params(path);
  std::filesystem::path meta = path;
  meta += ".meta";
  std::ifstream is(meta);
  if (!is) throw Error(ErrorKind::MissingArtifact, "checkpoint sidecar missing: " + meta.string());
  std::stringstream text;
  text << is.rdbuf();
  const std::string body = text.str();
  if (body.find("kind=lfp\n") != std::string::npos) {
    p.kind = PolicyKind::Lfp;
  } else if (body.find("kind=play_bc\n") != std::string::npos) {
    p.kind = PolicyKind::PlayBc;
  } else {
    throw Error(ErrorKind::Schema, meta.string() + ": missing or unknown 'kind'");
  }
  p.stats = data::parse_norm_stats(body);
  const int want = p.kind == PolicyKind::Lfp ? 2 * kObs : kObs;
  if (p.params.spec().input_width != want) {
    throw Error(ErrorKind::WidthMismatch, "checkpoint input width " + std::to_string(p.params.spec().input_width) +
                                              " does not match its kind (expected " + std::to_string(want) + ")");
  }
  return p;
}

// ---- rollouts ----------------------------------------------------------------

PolicyRunner::PolicyRunner(const Policy& p, double temperature, bool greedy, int context_ticks)
    : policy_(&p), temperature_(temperature), greedy_(greedy), norm_(p.stats), quant_(p.stats),
      context_ticks_(context_ticks), x_(p.params.spec().input_width, 1) {
  if (!greedy && !(temperature > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be > 0");
  if (context_ticks < 0) throw Error(ErrorKind::InvalidArgument, "context_ticks must be >= 0");
  if (p.params.spec().action_dims != sim::kActDim || p.params.spec().bins != data::kActionBins) {
    throw Error(ErrorKind::WidthMismatch, "policy head does not produce 8 x 256 action bins");
  }
  reset(0);
}

void PolicyRunner::reset(std::uint64_t seed) {
  hidden_ = seqnet::zero_hidden(policy_->params.spec());
  ticks_ = 0;
  rng_.seed(seed);
}

Action PolicyRunner::act(const EnvState& s, const EnvState* goal) {
  const int width = policy_->params.spec().input_width;
  const bool wants_goal = width == 2 * kObs;
  if (wants_goal != (goal != nullptr)) {
    throw Error(ErrorKind::WidthMismatch, "policy input width " + std::to_string(width) +
                                              (goal ? " cannot take a goal" : " requires a goal (width 38)"));
  }
  if (context_ticks_ > 0 && ticks_ > 0 && ticks_ % context_ticks_ == 0) {
    hidden_ = seqnet::zero_hidden(policy_->params.spec());
  }
  ++ticks_;
  norm_.apply(s.flat(), x_.data());
  if (goal != nullptr) norm_.apply(goal->flat(), x_.data() + kObs);
  const Eigen::MatrixXd raw = seqnet::rnn_step(policy_->params, x_, hidden_);
  const seqnet::ModlHead head = seqnet::make_head(policy_->params.spec(), raw.col(0));
  const std::vector<int> bins = greedy_ ? seqnet::modl_greedy(head) : seqnet::modl_sample(head, rng_, temperature_);
  data::Bins b{};
  std::copy(bins.begin(), bins.end(), b.begin());
  return Action::from_flat(quant_.dequantize(b));
}

data::Dataset generate_cloned_play(const Policy& bc, const SceneConfig& scene, const data::Dataset& source,
                                   const CloneConfig& cfg) {
  if (!(cfg.minutes > 0.0)) throw Error(ErrorKind::InvalidArgument, "clone: episode duration must be > 0");
  if (bc.kind != PolicyKind::PlayBc) throw Error(ErrorKind::InvalidArgument, "clone: needs a Play-BC policy");
  data::Dataset out;
  if (cfg.episodes == 0) return out;
  const std::size_t total = source.total_frames();
  if (total == 0) throw Error(ErrorKind::InvalidArgument, "clone: initial-state source dataset is empty");
  std::vector<std::size_t> cumulative;
  cumulative.reserve(source.episodes.size());
  std::size_t acc = 0;
  for (const auto& e : source.episodes) cumulative.push_back(acc += e.frames.size());

  const auto frames = static_cast<std::size_t>(std::llround(cfg.minutes * 60.0 * scene.control_hz));
  const std::string created = cfg.created.empty() ? data::now_timestamp() : cfg.created;
  sim::Simulator env(scene);
  PolicyRunner runner(bc, cfg.temperature, cfg.greedy, cfg.context_ticks);
  for (std::size_t i = 0; i < cfg.episodes; ++i) {
    const std::uint64_t seed_i = mix_seed(cfg.seed, i);
    Rng pick(seed_i);
    const std::size_t g = std::uniform_int_distribution<std::size_t>(0, total - 1)(pick);
    const auto ep = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), g) -
                                             cumulative.begin());
    const std::size_t before = ep == 0 ? 0 : cumulative[ep - 1];
    const EnvState start = EnvState::from_flat(source.episodes[ep].frames[g - before].obs);
    try {
      env.reset(start);
    } catch (const Error& e) {
      log_warn("clone episode " + std::to_string(i) + " skipped: " + e.what());
      continue;
    }
    runner.reset(mix_seed(seed_i, 1));
    data::Episode episode;
    episode.header.source = data::Source::Cloned;
    episode.header.seed = seed_i;
    episode.header.hz = scene.control_hz;
    episode.header.created = created;
    episode.frames.reserve(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      const EnvState& s = env.observe();
      const Action a = sim::clamp_action(scene, runner.act(s, nullptr));
      episode.frames.push_back({static_cast<std::int64_t>(t), s.flat(), a.flat()});
      env.step(a);
    }
    out.episodes.push_back(std::move(episode));
  }
  return out;
}

std::vector<EnvState> rollout_goal(const Policy& lfp, const SceneConfig& scene, const EnvState& initial,
                                   const EnvState& goal, int budget, const RolloutConfig& cfg) {
  if (lfp.params.spec().input_width != 2 * kObs) {
    throw Error(ErrorKind::WidthMismatch, "rollout_goal: policy input width " +
                                              std::to_string(lfp.params.spec().input_width) + ", expected 38");
  }
  if (budget < 0) throw Error(ErrorKind::InvalidArgument, "rollout_goal: negative budget");
  sim::Simulator env(scene);
  std::vector<EnvState> traj;
  traj.reserve(static_cast<std::size_t>(budget) + 1);
  traj.push_back(env.reset(initial));
  PolicyRunner runner(lfp, cfg.temperature, cfg.greedy, cfg.context_ticks);
  runner.reset(cfg.seed);
  for (int t = 0; t < budget; ++t) traj.push_back(env.step(runner.act(env.observe(), &goal)));
  return traj;
}

}  // namespace playclone::pipeline
