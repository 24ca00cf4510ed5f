#include <atomic>
#include <chrono>
#include <csignal>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "playclone/cli.hpp"
#include "playclone/coverage.hpp"

namespace playclone::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

fs::path under(const fs::path& root, const fs::path& p) { return p.is_absolute() ? p : root / p; }

// Inputs may also be given relative to the data root or the working directory.
fs::path existing(const fs::path& root, const fs::path& data_root, const fs::path& p) {
  const fs::path r = under(root, p);
  if (fs::exists(r)) return r;
  if (fs::exists(under(data_root, p))) return under(data_root, p);
  return fs::exists(p) ? p : r;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::MissingArtifact, "file not found: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * v << '%';
  return os.str();
}

// Seed streams derived from the master seed, one per pipeline stage.
enum Stage : std::uint64_t { kCollect = 1, kBc = 2, kClone = 3, kLfp = 4, kEval = 5, kRandom = 6 };

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  fs::path data(const fs::path& p) const { return under(cfg.data_root, p); }
  fs::path ckpt(const fs::path& p) const { return under(cfg.checkpoints(), p); }
  fs::path report(const fs::path& p) const { return under(cfg.reports(), p); }
  fs::path ckpt_in(const fs::path& p) const { return existing(cfg.checkpoints(), cfg.data_root, p); }
  fs::path report_in(const fs::path& p) const { return existing(cfg.reports(), cfg.data_root, p); }
  std::uint64_t seed(Stage s) const { return mix_seed(cfg.seed, s); }
};

data::NormStats stats_of(const fs::path& dir) { return data::compute_norm_stats(data::DatasetReader(dir)); }

// ---- collect ----

struct CollectArgs {
  std::string policy = "oracle";
  std::string out;
  std::string reference;
  std::string created;
};

void cmd_collect(Context& c, const CollectArgs& a) {
  agents::CollectConfig cc;
  cc.minutes = c.cfg.collect_minutes;
  cc.episode_minutes = c.cfg.collect_episode_minutes;
  cc.oracle = c.cfg.oracle;
  cc.created = a.created;
  if (a.policy == "oracle") {
    cc.policy = agents::PlayPolicy::Oracle;
    cc.seed = c.seed(kCollect);
  } else {
    cc.policy = agents::PlayPolicy::Random;
    cc.seed = c.seed(kRandom);
    if (a.reference.empty()) {
      throw Error(ErrorKind::InvalidArgument, "collect --policy random needs --reference <dataset>");
    }
    cc.random = agents::random_stats_from(stats_of(c.data(a.reference)));
  }
  const fs::path out = c.data(a.out.empty() ? "play_" + a.policy : a.out);
  const auto res = agents::collect_play(c.cfg.scene, cc);
  data::save_dataset(out, res.dataset);
  if (cc.policy == agents::PlayPolicy::Oracle) {
    std::string log;
    for (std::size_t i = 0; i < res.primitive_logs.size(); ++i) {
      log += "# episode " + std::to_string(i) + "\n" + agents::format_primitive_log(res.primitive_logs[i]);
    }
    write_text(out / "primitives.txt", log);
  }
  c.out << "collected " << res.dataset.episodes.size() << " episodes, " << res.dataset.total_frames()
        << " frames -> " << out.string() << '\n';
}

// ---- training ----

struct TrainArgs {
  std::vector<std::string> data;
  std::string stats_from;
  std::string out;
  std::vector<std::string> weights;
};

data::Dataset load_all(const Context& c, const std::vector<std::string>& dirs) {
  data::Dataset d;
  for (const auto& dir : dirs) {
    data::Dataset part = data::load_dataset(c.data(dir));
    for (auto& e : part.episodes) d.episodes.push_back(std::move(e));
  }
  return d;
}

void cmd_train(Context& c, const TrainArgs& a, pipeline::PolicyKind kind) {
  const bool lfp = kind == pipeline::PolicyKind::Lfp;
  pipeline::TrainConfig tc = lfp ? c.cfg.lfp : c.cfg.bc;
  tc.seed = c.seed(lfp ? kLfp : kBc);
  for (const auto& w : a.weights) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--weight expects source=value");
    RunConfig tmp;
    set_key(tmp, "lfp.weight." + w.substr(0, eq), w.substr(eq + 1));
    for (const auto& [s, v] : tmp.lfp.source_weights) tc.source_weights[s] = v;
  }
  const data::Dataset d = load_all(c, a.data);
  std::optional<data::NormStats> stats;
  if (!a.stats_from.empty()) stats = stats_of(c.data(a.stats_from));
  const auto res = lfp ? pipeline::train_lfp(d, tc, stats ? &*stats : nullptr)
                       : pipeline::train_play_bc(d, tc, stats ? &*stats : nullptr);
  const fs::path out = c.ckpt(a.out.empty() ? (lfp ? "lfp.ckpt" : "play_bc.ckpt") : a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  pipeline::save_policy(out, res.policy, tc, res.final_loss);
  fs::path log = out;
  log += ".log.csv";
  write_text(log, pipeline::format_train_log(res.log));
  c.out << (lfp ? "train-lfp" : "train-bc") << ": " << tc.steps << " steps on " << d.total_frames()
        << " frames, final loss " << res.final_loss << " -> " << out.string() << '\n';
}

// ---- clone ----

struct CloneArgs {
  std::string policy;
  std::string source;
  std::string out;
  std::string created;
};

void cmd_clone(Context& c, const CloneArgs& a) {
  const pipeline::Policy bc = pipeline::load_policy(c.ckpt_in(a.policy.empty() ? "play_bc.ckpt" : a.policy));
  if (bc.kind != pipeline::PolicyKind::PlayBc) {
    throw Error(ErrorKind::WidthMismatch, "clone needs a Play-BC checkpoint, got a goal-conditioned one");
  }
  const data::Dataset src = data::load_dataset(c.data(a.source));
  pipeline::CloneConfig cc = c.cfg.clone;
  cc.seed = c.seed(kClone);
  cc.created = a.created;
  const data::Dataset cloned = pipeline::generate_cloned_play(bc, c.cfg.scene, src, cc);
  const fs::path out = c.data(a.out.empty() ? "cloned" : a.out);
  data::save_dataset(out, cloned);
  c.out << "cloned " << cloned.episodes.size() << " episodes, " << cloned.total_frames() << " frames -> "
        << out.string() << '\n';
}

// ---- merge ----

void cmd_merge(Context& c, const std::vector<std::string>& inputs, const std::string& out_arg) {
  std::vector<fs::path> in;
  for (const auto& i : inputs) in.push_back(c.data(i));
  const fs::path out = c.data(out_arg);
  const auto rep = data::merge_datasets(in, out);
  c.out << "merged " << rep.manifest.entries.size() << " episodes -> " << out.string() << '\n';
  for (const auto& [s, n] : rep.frames_by_source) c.out << "  " << data::source_name(s) << ": " << n << " frames\n";
}

// ---- eval ----

struct EvalArgs {
  std::string policy;
  std::string actor = "lfp";
  std::string reference;
  std::string out;
};

void cmd_eval(Context& c, const EvalArgs& a) {
  const std::uint64_t seed = c.seed(kEval);
  bench::EvalReport rep;
  if (a.actor == "lfp") {
    const pipeline::Policy p = pipeline::load_policy(c.ckpt_in(a.policy.empty() ? "lfp.ckpt" : a.policy));
    if (p.kind != pipeline::PolicyKind::Lfp) {
      throw Error(ErrorKind::WidthMismatch, "eval needs a goal-conditioned checkpoint, got Play-BC");
    }
    rep = bench::run_eval(p, c.cfg.scene, c.cfg.eval_trials, seed, c.cfg.rollout);
  } else if (a.actor == "expert") {
    bench::ExpertActor actor(c.cfg.scene);
    rep = bench::run_eval(c.cfg.scene, actor, c.cfg.eval_trials, seed, "expert");
  } else {
    if (a.reference.empty()) throw Error(ErrorKind::InvalidArgument, "eval --actor random needs --reference");
    bench::RandomActor actor(agents::random_stats_from(stats_of(c.data(a.reference))));
    rep = bench::run_eval(c.cfg.scene, actor, c.cfg.eval_trials, seed, "random");
  }
  const fs::path out = c.report(a.out.empty() ? "eval.csv" : a.out);
  write_text(out, bench::format_eval_csv(rep));
  for (const auto& t : rep.tasks) {
    c.out << "  " << std::left << std::setw(22) << sim::task_name(t.task) << t.successes << '/' << t.trials << '\n';
  }
  c.out << "average " << pct(rep.average) << " +- " << pct(rep.std_error) << " -> " << out.string() << '\n';
}

// ---- coverage ----

struct CoverageArgs {
  std::string reference;
  std::string reference_tag = "reference";
  std::vector<std::string> segments;
  std::size_t stride = 1000;
  std::string out;
};

void cmd_coverage(Context& c, const CoverageArgs& a) {
  std::vector<std::pair<std::string, data::Dataset>> parts;
  parts.emplace_back(a.reference_tag, data::load_dataset(c.data(a.reference)));
  for (const auto& s : a.segments) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::InvalidArgument, "--segment expects tag=dataset");
    parts.emplace_back(s.substr(0, eq), data::load_dataset(c.data(s.substr(eq + 1))));
  }
  const coverage::CoverageGrid grid = coverage::build_grid(parts.front().second);
  std::vector<coverage::Segment> segs;
  for (const auto& [tag, d] : parts) segs.push_back({tag, &d});
  const auto curve = coverage::coverage_curve(segs, grid, a.stride, c.cfg.scene.control_hz);
  const fs::path out = c.report(a.out.empty() ? "coverage.csv" : a.out);
  write_text(out, coverage::format_curve_csv(curve));
  for (std::size_t i = 0; i < curve.segments.size(); ++i) {
    const auto& s = curve.segments[i];
    c.out << "  " << std::left << std::setw(16) << s.tag << (s.unique_after - s.unique_before) << " new bins";
    if (s.last_frame > s.first_frame) c.out << ", " << coverage::coverage_rate(curve, i) << " per hour";
    c.out << '\n';
  }
  c.out << "unique bins " << curve.final_unique() << " -> " << out.string() << '\n';
}

// ---- sweep ----

struct SweepArgs {
  std::string cache;
  std::string out;
};

void cmd_sweep(Context& c, const SweepArgs& a) {
  const bench::BaseConfig base = sweep_config(c.cfg);
  const bench::SweepSpec& spec = c.cfg.sweep;
  if (spec.grid.empty()) throw Error(ErrorKind::InvalidArgument, "sweep grid is empty");
  const fs::path cache = c.ckpt(a.cache.empty() ? "sweep_cache" : a.cache);
  const auto rows = bench::run_sweep(spec, base, cache);
  const fs::path out =
      c.report(a.out.empty() ? "sweep_" + std::string(bench::sweep_name(spec.kind)) + ".csv" : a.out);
  write_text(out, bench::format_sweep_csv(spec, rows));
  for (const auto& p : bench::summarize(rows)) {
    c.out << "  point " << p.point << ": " << pct(p.mean) << " +- " << pct(p.std_error) << " (" << p.seeds
          << " seeds)\n";
  }
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.ok ? 0 : 1;
  c.out << rows.size() << " rows, " << failed << " failed -> " << out.string() << '\n';
}

// ---- serve ----

void cmd_serve(Context& c, double duration) {
  bridge::ServerConfig sc = c.cfg.serve;
  sc.scene = c.cfg.scene;
  sc.seed = c.cfg.seed;
  sc.output_dir = c.data(sc.output_dir);
  bridge::TeleopServer server(sc);
  const std::uint16_t port = server.start();
  c.out << "listening on ws://" << sc.host << ':' << port << "  recording to " << sc.output_dir.string()
        << std::endl;
  g_interrupted = false;
  auto prev_int = std::signal(SIGINT, on_signal);
  auto prev_term = std::signal(SIGTERM, on_signal);
  if (duration > 0) {
    const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(duration);
    while (!g_interrupted && std::chrono::steady_clock::now() < until) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    server.stop();
  } else {
    server.wait(&g_interrupted);
  }
  std::signal(SIGINT, prev_int);
  std::signal(SIGTERM, prev_term);
  c.out << "stopped after " << server.ticks() << " ticks, " << server.episodes_recorded() << " episodes recorded\n";
}

// ---- replay ----

void cmd_replay(Context& c, const std::string& path_arg, const std::string& frames_out) {
  const fs::path path = c.data(path_arg);
  const data::Episode e = data::load_episode(path);
  data::validate_episode(e);
  c.out << path.string() << ": source=" << data::source_name(e.header.source) << " seed=" << e.header.seed
        << " hz=" << e.header.hz << " frames=" << e.frames.size() << " flags=" << e.header.flags
        << " created=" << e.header.created << '\n';
  if (!frames_out.empty()) {
    std::ostringstream os;
    os << "tick";
    for (int i = 0; i < sim::kObsDim; ++i) os << ",obs" << i;
    for (int i = 0; i < sim::kActDim; ++i) os << ",act" << i;
    os << '\n' << std::setprecision(17);
    for (const auto& f : e.frames) {
      os << f.tick;
      for (double v : f.obs) os << ',' << v;
      for (double v : f.act) os << ',' << v;
      os << '\n';
    }
    write_text(c.report(frames_out), os.str());
  }
  // Re-execute the recorded actions from the first state and compare observations.
  if (e.frames.size() >= 2) {
    sim::Simulator env(c.cfg.scene);
    env.reset(sim::EnvState::from_flat(e.frames.front().obs));
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < e.frames.size(); ++i) {
      env.step(sim::Action::from_flat(e.frames[i].act));
      const sim::Obs o = env.observe().flat();
      for (int d = 0; d < sim::kObsDim; ++d) worst = std::max(worst, std::abs(o[d] - e.frames[i + 1].obs[d]));
    }
    c.out << "replay max |obs deviation| " << worst << '\n';
  }
}

// ---- validate ----

void cmd_validate(Context& c, const std::vector<std::string>& paths) {
  for (const auto& p_arg : paths) {
    fs::path p = c.data(p_arg);
    if (!fs::exists(p) && fs::exists(c.ckpt(p_arg))) p = c.ckpt(p_arg);
    if (!fs::exists(p)) throw Error(ErrorKind::MissingArtifact, "no such artifact: " + p.string());
    if (fs::is_directory(p)) {
      data::validate_dataset(p);
      const data::Manifest m = data::load_manifest(p);
      c.out << "ok dataset " << p.string() << " (" << m.entries.size() << " episodes, " << m.total_frames()
            << " frames)\n";
    } else if (p.extension() == ".play") {
      data::validate_episode(data::load_episode(p));
      c.out << "ok episode " << p.string() << '\n';
    } else {
      const auto pol = pipeline::load_policy(p);
      c.out << "ok checkpoint " << p.string() << " ("
            << (pol.kind == pipeline::PolicyKind::Lfp ? "lfp" : "play_bc") << ", "
            << pol.params.spec().param_count() << " params)\n";
    }
  }
}

// ---- plot ----

void cmd_plot(Context& c, const std::string& kind, const std::vector<std::string>& inputs, const std::string& out_arg,
              const std::string& title) {
  std::vector<std::pair<std::string, std::string>> in;
  for (const auto& s : inputs) {
    const auto eq = s.find('=');
    const fs::path p = c.report_in(eq == std::string::npos ? s : s.substr(eq + 1));
    in.emplace_back(eq == std::string::npos ? p.stem().string() : s.substr(0, eq), read_text(p));
  }
  const std::string svg = kind == "coverage" ? render_coverage_svg(in, title) : render_sweep_svg(in, title);
  const fs::path out = c.report(out_arg.empty() ? kind + ".svg" : out_arg);
  write_text(out, svg);
  c.out << "wrote " << out.string() << '\n';
}

// Finds --config before full parsing so that flags can override file values.
std::optional<std::string> prescan_config(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return std::nullopt;
}

void add_train_flags(CLI::App* sub, pipeline::TrainConfig& tc, TrainArgs& a, const char* default_out) {
  sub->add_option("--data", a.data, "dataset directory (repeatable)")->required();
  sub->add_option("--stats-from", a.stats_from, "dataset whose statistics define normalization and action bins");
  sub->add_option("--out", a.out, std::string("checkpoint path (default ") + default_out + ")");
  sub->add_option("--steps", tc.steps, "optimizer steps");
  sub->add_option("--batch", tc.batch, "windows per step");
  sub->add_option("--lr", tc.adam.lr, "Adam learning rate");
  sub->add_option("--layers", tc.spec.layers, "recurrent layers");
  sub->add_option("--width", tc.spec.width, "hidden width");
  sub->add_option("--mixtures", tc.spec.mixtures, "logistic mixture components");
  sub->add_option("--clip-norm", tc.clip_norm, "gradient norm clip");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::optional<Context> ctx;
  bool verbose = false;
  const auto fail = [&](const std::string& kind, int code, const std::string& msg) {
    err << "error: kind=" << kind << " code=" << code << " message=" << quoted(msg) << '\n';
    return code;
  };

  LogSink prev = set_log_sink([&err, &verbose](LogLevel l, const std::string& m) {
    if (l == LogLevel::Warn) {
      err << "warning: " << m << '\n';
    } else if (verbose) {
      err << m << '\n';
    }
  });
  struct Restore {
    LogSink* prev;
    ~Restore() { set_log_sink(std::move(*prev)); }
  } restore{&prev};

  try {
    RunConfig cfg;
    if (const auto cf = prescan_config(args)) load_config_file(cfg, *cf);
    if (const char* root = std::getenv("PLAYCLONE_ROOT"); root != nullptr && *root != '\0') cfg.data_root = root;
    ctx.emplace(Context{std::move(cfg), out, err});
  } catch (const Error& e) {
    return fail(to_string(e.kind()), exit_code(e.kind()), e.what());
  }
  RunConfig& cfg = ctx->cfg;

  CLI::App app{"playclone: learning to play by imitating play, at desk scale"};
  app.name(args.empty() ? "playclone" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "help for every subcommand");
  std::string config_path;
  std::vector<std::string> sets;
  std::string data_root, ckpt_root, report_root;
  app.add_option("--config", config_path, "key=value config file (flags override its values)");
  app.add_option("--set", sets, "override one config key, e.g. --set lfp.steps=500 (repeatable)");
  app.add_option("--seed", cfg.seed, "master seed");
  app.add_option("--data-root", data_root, "root for relative dataset paths (env PLAYCLONE_ROOT)");
  app.add_option("--checkpoint-root", ckpt_root, "root for relative checkpoint paths (default <data-root>/checkpoints)");
  app.add_option("--report-root", report_root, "root for relative report paths (default <data-root>/reports)");
  app.add_flag("-v,--verbose", verbose, "print progress messages");

  CollectArgs collect;
  auto* c_collect = app.add_subcommand("collect", "generate scripted play (oracle) or random play");
  c_collect->add_option("--policy", collect.policy, "oracle or random")
      ->check(CLI::IsMember({"oracle", "random"}));
  c_collect->add_option("--minutes", cfg.collect_minutes, "total minutes of play");
  c_collect->add_option("--episode-minutes", cfg.collect_episode_minutes, "minutes per episode");
  c_collect->add_option("--out", collect.out, "output dataset directory (default play_<policy>)");
  c_collect->add_option("--reference", collect.reference, "dataset whose action statistics drive random play");
  c_collect->add_option("--wander-prob", cfg.oracle.wander_prob, "oracle wander probability");
  c_collect->add_option("--action-noise", cfg.oracle.action_noise, "oracle action noise fraction");
  c_collect->add_option("--created", collect.created, "header timestamp (default now)");

  TrainArgs bc_args, lfp_args;
  auto* c_bc = app.add_subcommand("train-bc", "train the Play-BC policy on play data");
  add_train_flags(c_bc, cfg.bc, bc_args, "play_bc.ckpt");
  auto* c_lfp = app.add_subcommand("train-lfp", "train the goal-conditioned LfP policy");
  add_train_flags(c_lfp, cfg.lfp, lfp_args, "lfp.ckpt");
  c_lfp->add_option("--weight", lfp_args.weights, "window sampling weight per source, e.g. cloned=0.5 (repeatable)");

  CloneArgs clone;
  auto* c_clone = app.add_subcommand("clone", "generate cloned play by unrolling Play-BC");
  c_clone->add_option("--policy", clone.policy, "Play-BC checkpoint (default play_bc.ckpt)");
  c_clone->add_option("--source", clone.source, "dataset whose frames seed the episodes")->required();
  c_clone->add_option("--episodes", cfg.clone.episodes, "number of episodes");
  c_clone->add_option("--minutes", cfg.clone.minutes, "minutes per episode");
  c_clone->add_option("--temperature", cfg.clone.temperature, "sampling temperature");
  c_clone->add_flag("--greedy", cfg.clone.greedy, "take the most likely bin instead of sampling");
  c_clone->add_option("--out", clone.out, "output dataset directory (default cloned)");
  c_clone->add_option("--created", clone.created, "header timestamp (default now)");

  std::vector<std::string> merge_in;
  std::string merge_out;
  auto* c_merge = app.add_subcommand("merge", "combine datasets into one manifest without copying episodes");
  c_merge->add_option("--input", merge_in, "input dataset directory (repeatable)")->required();
  c_merge->add_option("--out", merge_out, "output dataset directory")->required();

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "18-task success evaluation");
  c_eval->add_option("--policy", ev.policy, "LfP checkpoint (default lfp.ckpt)");
  c_eval->add_option("--actor", ev.actor, "lfp, expert or random")->check(CLI::IsMember({"lfp", "expert", "random"}));
  c_eval->add_option("--reference", ev.reference, "dataset for random-actor statistics");
  c_eval->add_option("--trials", cfg.eval_trials, "trials per task");
  c_eval->add_option("--temperature", cfg.rollout.temperature, "sampling temperature");
  c_eval->add_flag("--greedy", cfg.rollout.greedy, "take the most likely bin instead of sampling");
  c_eval->add_option("--out", ev.out, "report CSV (default eval.csv)");

  CoverageArgs cov;
  auto* c_cov = app.add_subcommand("coverage", "cumulative unique-bin curve over concatenated datasets");
  c_cov->add_option("--reference", cov.reference, "reference dataset; defines the grid and comes first")->required();
  c_cov->add_option("--reference-tag", cov.reference_tag, "segment tag of the reference");
  c_cov->add_option("--segment", cov.segments, "tag=dataset appended in order (repeatable)");
  c_cov->add_option("--stride", cov.stride, "frames between curve points")->check(CLI::PositiveNumber);
  c_cov->add_option("--out", cov.out, "curve CSV (default coverage.csv)");

  SweepArgs sw;
  std::string sweep_kind;
  std::vector<double> sweep_grid;
  std::vector<std::uint64_t> sweep_seeds;
  auto* c_sweep = app.add_subcommand("sweep", "run an experiment grid end to end");
  c_sweep->add_option("--kind", sweep_kind, "data_quantity, capacity, clone_length or random_baseline");
  c_sweep->add_option("--grid", sweep_grid, "grid points")->delimiter(',');
  c_sweep->add_option("--seeds", sweep_seeds, "seeds per point")->delimiter(',');
  c_sweep->add_option("--trials", cfg.eval_trials, "evaluation trials per task");
  c_sweep->add_option("--cache", sw.cache, "checkpoint cache directory (default sweep_cache)");
  c_sweep->add_option("--out", sw.out, "sweep CSV (default sweep_<kind>.csv)");

  double serve_seconds = 0.0;
  auto* c_serve = app.add_subcommand("serve", "teleoperation bridge for the browser client");
  c_serve->add_option("--host", cfg.serve.host, "listen address");
  c_serve->add_option("--port", cfg.serve.port, "listen port (0 picks one)");
  c_serve->add_option("--out", cfg.serve.output_dir, "dataset directory receiving recorded episodes");
  c_serve->add_option("--hz", cfg.serve.hz, "tick rate");
  c_serve->add_option("--duration", serve_seconds, "stop after this many seconds (default: until interrupted)");

  std::string replay_path, replay_frames;
  auto* c_replay = app.add_subcommand("replay", "summarize an episode and re-execute its actions");
  c_replay->add_option("episode", replay_path, ".play file")->required();
  c_replay->add_option("--frames-csv", replay_frames, "also dump every frame to this CSV");

  std::vector<std::string> validate_paths;
  auto* c_validate = app.add_subcommand("validate", "check datasets, episode files or checkpoints");
  c_validate->add_option("paths", validate_paths, "dataset directory, .play file or checkpoint")->required();

  std::string plot_kind = "sweep", plot_out, plot_title;
  std::vector<std::string> plot_in;
  auto* c_plot = app.add_subcommand("plot", "render sweep or coverage CSVs as an SVG line chart");
  c_plot->add_option("--kind", plot_kind, "sweep or coverage")->check(CLI::IsMember({"sweep", "coverage"}));
  c_plot->add_option("--input", plot_in, "[label=]csv (repeatable)")->required();
  c_plot->add_option("--out", plot_out, "SVG path (default <kind>.svg)");
  c_plot->add_option("--title", plot_title, "chart title");

  auto* c_keys = app.add_subcommand("config-keys", "list every config key");

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    return fail("usage", kUsageExit, e.what());
  }

  try {
    // Flags bound to sweep fields are applied after the kind resets its defaults.
    if (!sweep_kind.empty()) set_key(cfg, "sweep.kind", sweep_kind);
    if (!sweep_grid.empty()) cfg.sweep.grid = sweep_grid;
    if (!sweep_seeds.empty()) cfg.sweep.seeds = sweep_seeds;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--set expects key=value");
      set_key(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!data_root.empty()) cfg.data_root = data_root;
    if (!ckpt_root.empty()) cfg.checkpoint_root = ckpt_root;
    if (!report_root.empty()) cfg.report_root = report_root;
    cfg.scene.validate();

    Context& c = *ctx;
    if (c_collect->parsed()) {
      cmd_collect(c, collect);
    } else if (c_bc->parsed()) {
      cmd_train(c, bc_args, pipeline::PolicyKind::PlayBc);
    } else if (c_lfp->parsed()) {
      cmd_train(c, lfp_args, pipeline::PolicyKind::Lfp);
    } else if (c_clone->parsed()) {
      cmd_clone(c, clone);
    } else if (c_merge->parsed()) {
      cmd_merge(c, merge_in, merge_out);
    } else if (c_eval->parsed()) {
      cmd_eval(c, ev);
    } else if (c_cov->parsed()) {
      cmd_coverage(c, cov);
    } else if (c_sweep->parsed()) {
      cmd_sweep(c, sw);
    } else if (c_serve->parsed()) {
      cmd_serve(c, serve_seconds);
    } else if (c_replay->parsed()) {
      cmd_replay(c, replay_path, replay_frames);
    } else if (c_validate->parsed()) {
      cmd_validate(c, validate_paths);
    } else if (c_plot->parsed()) {
      cmd_plot(c, plot_kind, plot_in, plot_out, plot_title);
    } else if (c_keys->parsed()) {
      for (const auto& k : config_keys()) out << k << '\n';
    }
  } catch (const Error& e) {
    return fail(to_string(e.kind()), exit_code(e.kind()), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(to_string(ErrorKind::Io), exit_code(ErrorKind::Io), e.what());
  } catch (const std::exception& e) {
    return fail("internal", kInternalExit, e.what());
  }
  return 0;
}

}  // namespace playclone::cli
