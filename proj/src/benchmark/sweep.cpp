#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "playclone/benchmark.hpp"
#include "playclone/coverage.hpp"

namespace playclone::bench {

namespace fs = std::filesystem;

std::string_view sweep_name(SweepKind k) {
  switch (k) {
    case SweepKind::DataQuantity:
      return "data_quantity";
    case SweepKind::Capacity:
      return "capacity";
    case SweepKind::CloneLength:
      return "clone_length";
    case SweepKind::RandomBaseline:
      return "random_baseline";
  }
  return "?";
}

SweepKind parse_sweep(std::string_view name) {
  for (SweepKind k : {SweepKind::DataQuantity, SweepKind::Capacity, SweepKind::CloneLength, SweepKind::RandomBaseline}) {
    if (sweep_name(k) == name) return k;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown sweep '" + std::string(name) +
                                              "' (expected data_quantity, capacity, clone_length or random_baseline)");
}

SweepSpec default_sweep(SweepKind kind) {
  SweepSpec s;
  s.kind = kind;
  switch (kind) {
    case SweepKind::DataQuantity:
      s.grid = {0, 2, 5, 10};
      break;
    case SweepKind::RandomBaseline:
      s.grid = {0, 2, 5, 10};
      break;
    case SweepKind::Capacity:
      s.grid = {0, 1, 2, 3};
      break;
    case SweepKind::CloneLength:
      s.grid = {6, 15, 60};
      break;
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::uint64_t fnv(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string describe(const pipeline::TrainConfig& t) {
  std::ostringstream os;
  os.precision(17);
  os << t.spec.layers << 'x' << t.spec.width << " k" << t.spec.mixtures << " f" << t.spec.log_scale_floor << " b"
     << t.batch << " s" << t.steps << " lr" << t.adam.lr << " c" << t.clip_norm << " p"
     << static_cast<int>(t.precision);
  for (const auto& [src, w] : t.source_weights) os << ' ' << data::source_name(src) << '=' << w;
  return os.str();
}

// Everything that determines the artifacts of a seed, excluding the sweep point.
std::string config_key(const BaseConfig& b) {
  std::ostringstream os;
  os.precision(17);
  os << "h" << b.human_minutes << " o" << b.oracle.wander_prob << ',' << b.oracle.primitive_tick_limit << ','
     << b.oracle.action_noise << " bc[" << describe(b.bc) << "] lfp[" << describe(b.lfp) << "] cm" << b.clone_minutes
     << " ct" << b.clone_temperature << " ch" << b.clone_hours << " t" << b.eval_trials << " r"
     << b.rollout.temperature << b.rollout.greedy << " hz" << b.scene.control_hz << " budget" << b.scene.task_budget;
  for (const Capacity& c : b.capacities) os << " cap" << c.layers << 'x' << c.width;
  return os.str();
}

class Runner {
 public:
  Runner(const BaseConfig& base, fs::path cache) : base_(base), cache_(std::move(cache)) {
    if (!cache_.empty()) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv(config_key(base_))));
      cache_ /= buf;
      fs::create_directories(cache_);
      std::ofstream(cache_ / "config.txt") << config_key(base_) << '\n';
    }
  }

  SweepRow run(SweepKind kind, double point, std::uint64_t seed) {
    SweepRow row;
    row.point = point;
    row.seed = seed;
    const data::Dataset& human = human_data(seed);
    const data::NormStats& stats = human_stats(seed);

    // The tag names the training data, so identical experiments in different
    // sweeps share one cached LfP checkpoint.
    std::string tag;
    data::Dataset extra;
    auto clone_tag = [](int layers, int width, double hours, double seconds) {
      return "clone_" + std::to_string(layers) + "x" + std::to_string(width) + "_h" + fmt(hours) + "_e" + fmt(seconds);
    };
    const int bl = base_.bc.spec.layers;
    const int bw = base_.bc.spec.width;
    const double clone_seconds = base_.clone_minutes * 60.0;
    switch (kind) {
      case SweepKind::DataQuantity:
        tag = clone_tag(bl, bw, point, clone_seconds);
        extra = clones(seed, bl, bw, point, base_.clone_minutes);
        break;
      case SweepKind::Capacity: {
        const auto idx = static_cast<std::size_t>(point);
        if (point < 0 || idx >= base_.capacities.size() || static_cast<double>(idx) != point) {
          throw Error(ErrorKind::InvalidArgument, "capacity point " + fmt(point) + " is not a capacity index");
        }
        const Capacity c = base_.capacities[idx];
        tag = clone_tag(c.layers, c.width, base_.clone_hours, clone_seconds);
        extra = clones(seed, c.layers, c.width, base_.clone_hours, base_.clone_minutes);
        break;
      }
      case SweepKind::CloneLength:
        if (!(point > 0)) throw Error(ErrorKind::InvalidArgument, "clone length must be > 0 seconds");
        tag = clone_tag(bl, bw, base_.clone_hours, point);
        extra = clones(seed, bl, bw, base_.clone_hours, point / 60.0);
        break;
      case SweepKind::RandomBaseline:
        tag = "random_h" + fmt(point);
        extra = random_play(seed, point);
        break;
    }
    if (extra.episodes.empty()) tag = "human_only";

    data::Dataset combined = human;
    for (auto& e : extra.episodes) combined.episodes.push_back(std::move(e));
    row.train_frames = combined.total_frames();
    const coverage::CoverageGrid grid = coverage::build_grid(human);
    coverage::UniqueCounter counter(grid);
    for (const auto& e : combined.episodes) {
      for (const auto& f : e.frames) counter.add(f.obs);
    }
    row.unique_bins = counter.unique();

    const pipeline::Policy lfp = cached_policy("lfp_" + tag, seed, [&] {
      pipeline::TrainConfig cfg = base_.lfp;
      cfg.seed = mix_seed(seed, 4);
      return pipeline::train_lfp(combined, cfg, &stats);
    }, base_.lfp);
    row.report = run_eval(lfp, base_.scene, base_.eval_trials, mix_seed(seed, 5), base_.rollout);
    row.ok = true;
    return row;
  }

 private:
  fs::path seed_dir(std::uint64_t seed) const {
    const fs::path p = cache_ / ("seed_" + std::to_string(seed));
    fs::create_directories(p);
    return p;
  }

  const data::Dataset& human_data(std::uint64_t seed) {
    auto it = human_.find(seed);
    if (it != human_.end()) return it->second;
    agents::CollectConfig cc;
    cc.policy = agents::PlayPolicy::Oracle;
    cc.minutes = base_.human_minutes;
    cc.seed = mix_seed(seed, 1);
    cc.oracle = base_.oracle;
    cc.created = base_.created;
    return human_.emplace(seed, agents::collect_play(base_.scene, cc).dataset).first->second;
  }

  const data::NormStats& human_stats(std::uint64_t seed) {
    auto it = stats_.find(seed);
    if (it != stats_.end()) return it->second;
    return stats_.emplace(seed, data::compute_norm_stats(human_data(seed))).first->second;
  }

  template <class Train>
  pipeline::Policy cached_policy(const std::string& name, std::uint64_t seed, Train train,
                                 const pipeline::TrainConfig& cfg) {
    if (cache_.empty()) return train().policy;
    const fs::path path = seed_dir(seed) / (name + ".ckpt");
    if (fs::exists(path) && fs::exists(fs::path(path.string() + ".meta"))) {
      log_info("sweep: reusing " + path.string());
      return pipeline::load_policy(path);
    }
    pipeline::TrainResult r = train();
    pipeline::save_policy(path, r.policy, cfg, r.final_loss);
    return std::move(r.policy);
  }

  const pipeline::Policy& bc_policy(std::uint64_t seed, int layers, int width) {
    const std::string name = "bc_" + std::to_string(layers) + "x" + std::to_string(width);
    const std::string key = name + "/" + std::to_string(seed);
    auto it = bc_.find(key);
    if (it != bc_.end()) return it->second;
    pipeline::TrainConfig cfg = base_.bc;
    cfg.spec.layers = layers;
    cfg.spec.width = width;
    cfg.seed = mix_seed(seed, 2);
    const data::Dataset& human = human_data(seed);
    const data::NormStats& stats = human_stats(seed);
    pipeline::Policy p = cached_policy(name, seed, [&] { return pipeline::train_play_bc(human, cfg, &stats); }, cfg);
    return bc_.emplace(key, std::move(p)).first->second;
  }

  data::Dataset clones(std::uint64_t seed, int layers, int width, double hours, double episode_minutes) {
    if (!(hours > 0)) return {};
    const pipeline::Policy& bc = bc_policy(seed, layers, width);
    pipeline::CloneConfig cc;
    cc.minutes = episode_minutes;
    cc.episodes = static_cast<std::size_t>(std::llround(hours * 60.0 / episode_minutes));
    cc.temperature = base_.clone_temperature;
    cc.seed = mix_seed(seed, 3);
    cc.created = base_.created;
    return pipeline::generate_cloned_play(bc, base_.scene, human_data(seed), cc);
  }

  data::Dataset random_play(std::uint64_t seed, double hours) {
    if (!(hours > 0)) return {};
    agents::CollectConfig cc;
    cc.policy = agents::PlayPolicy::Random;
    cc.minutes = hours * 60.0;
    cc.episode_minutes = 1.0;
    cc.seed = mix_seed(seed, 6);
    cc.random = agents::random_stats_from(human_stats(seed));
    cc.created = base_.created;
    data::Dataset d = agents::collect_play(base_.scene, cc).dataset;
    return d;
  }

  BaseConfig base_;
  fs::path cache_;
  std::map<std::uint64_t, data::Dataset> human_;
  std::map<std::uint64_t, data::NormStats> stats_;
  std::map<std::string, pipeline::Policy> bc_;
};

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const BaseConfig& base, const fs::path& cache_dir) {
  if (spec.grid.empty()) throw Error(ErrorKind::InvalidArgument, "sweep grid is empty");
  if (spec.seeds.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one seed");
  if (spec.seeds.size() < 3) log_warn("sweep: fewer than 3 seeds per point; not enough for headline claims");
  Runner runner(base, cache_dir);
  std::vector<SweepRow> rows;
  for (double point : spec.grid) {
    for (std::uint64_t seed : spec.seeds) {
      try {
        rows.push_back(runner.run(spec.kind, point, seed));
      } catch (const std::exception& e) {
        SweepRow row;
        row.point = point;
        row.seed = seed;
        row.error = e.what();
        log_warn("sweep " + std::string(sweep_name(spec.kind)) + " point " + fmt(point) + " seed " +
                 std::to_string(seed) + " failed: " + e.what());
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string format_sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "# sweep=" << sweep_name(spec.kind) << '\n';
  os << "point,seed,status,average,std_error,train_frames,unique_bins";
  for (sim::TaskId t : sim::all_tasks()) os << ',' << sim::task_name(t);
  os << ",error\n";
  char buf[64];
  for (const SweepRow& r : rows) {
    os << fmt(r.point) << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.report.average, r.report.std_error);
      os << buf;
    } else {
      os << ',';
    }
    os << ',' << r.train_frames << ',' << r.unique_bins;
    for (std::size_t i = 0; i < sim::all_tasks().size(); ++i) {
      os << ',';
      if (r.ok) {
        std::snprintf(buf, sizeof buf, "%.6f", r.report.tasks[i].rate());
        os << buf;
      }
    }
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << ',' << err << '\n';
  }
  return os.str();
}

std::vector<PointSummary> summarize(const std::vector<SweepRow>& rows) {
  std::vector<PointSummary> out;
  std::map<double, std::vector<double>> by_point;
  std::vector<double> order;
  for (const SweepRow& r : rows) {
    if (!by_point.count(r.point)) order.push_back(r.point);
    auto& v = by_point[r.point];
    if (r.ok) v.push_back(r.report.average);
  }
  for (double p : order) {
    const auto& v = by_point[p];
    PointSummary s;
    s.point = p;
    s.seeds = static_cast<int>(v.size());
    if (!v.empty()) {
      double sum = 0.0;
      for (double x : v) sum += x;
      s.mean = sum / static_cast<double>(v.size());
    }
    if (v.size() >= 2) {
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.std_error = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace playclone::bench
