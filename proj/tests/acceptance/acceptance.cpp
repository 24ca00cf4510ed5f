// Acceptance run: one PASS/FAIL line per criterion. The exit status reports
// whether the run itself completed, not whether every criterion passed.
#include <malloc.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "../oracles/coverage_oracle.hpp"
#include "../oracles/gradcheck.hpp"
#include "playclone/agents.hpp"
#include "playclone/benchmark.hpp"
#include "playclone/cli.hpp"
#include "playclone/coverage.hpp"
#include "playclone/playdata.hpp"
#include "playclone/seqnet.hpp"

using namespace playclone;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

data::Dataset oracle_play(double minutes, double episode_minutes, std::uint64_t seed) {
  agents::CollectConfig cc;
  cc.minutes = minutes;
  cc.episode_minutes = episode_minutes;
  cc.seed = seed;
  return agents::collect_play(sim::SceneConfig{}, cc).dataset;
}

// ---- 1..7: component checks ----

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  long checked = 0;
  for (int c = 0; c < 20; ++c) {
    Rng rng(mix_seed(77, c));
    seqnet::NetSpec s;
    s.input_width = std::uniform_int_distribution<int>(1, 6)(rng);
    s.layers = std::uniform_int_distribution<int>(1, 3)(rng);
    s.width = std::uniform_int_distribution<int>(2, 8)(rng);
    s.mixtures = std::uniform_int_distribution<int>(1, 4)(rng);
    s.action_dims = std::uniform_int_distribution<int>(1, 3)(rng);
    s.bins = std::uniform_int_distribution<int>(0, 1)(rng) ? 256 : 16;
    const auto p = seqnet::PolicyParams::random(s, rng);
    const auto batch = oracle::random_batch(s, rng, 3, 1, 6);
    const auto r = oracle::gradient_check(p, batch);
    worst = std::max(worst, r.max_rel);
    checked += r.checked;
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 120.0,
          fmt("max relative error %.2e over 20 configs (%ld parameters) in %.1f s", worst, checked, secs)};
}

Outcome modl_normalization() {
  Rng rng(2024);
  double worst = 0.0;
  for (int h = 0; h < 1000; ++h) {
    const int dims = sim::kActDim;
    const int K = std::uniform_int_distribution<int>(1, 10)(rng);
    Eigen::VectorXd raw(dims * 3 * K);
    for (int d = 0; d < dims; ++d) {
      for (int k = 0; k < K; ++k) {
        raw[d * 3 * K + k] = uniform(rng, -10, 10);
        raw[d * 3 * K + K + k] = uniform(rng, -3, 3);
        raw[d * 3 * K + 2 * K + k] = uniform(rng, -14, 4);
      }
    }
    const seqnet::ModlHead head(dims, K, 256, -10.0, raw);
    for (int d = 0; d < dims; ++d) {
      long double sum = 0.0L;
      for (int b = 0; b < 256; ++b) sum += std::exp(static_cast<long double>(seqnet::modl_dim_logprob(head, d, b)));
      worst = std::max(worst, static_cast<double>(std::fabs(sum - 1.0L)));
    }
  }
  return {worst <= 1e-6, fmt("max |sum - 1| = %.2e over 1000 heads x 8 dims", worst)};
}

Outcome window_bounds() {
  const data::Dataset d = oracle_play(5.0, 1.0, 31);
  const data::WindowSampler ws(d);
  Rng rng(5);
  int bad_len = 0, bad_goal = 0;
  for (int i = 0; i < 10000; ++i) {
    const data::Window w = ws.sample(rng);
    if (w.length() < 32 || w.length() > 64) ++bad_len;
    if (w.goal != w.frames.back().obs) ++bad_goal;
  }
  return {bad_len == 0 && bad_goal == 0,
          fmt("10000 windows: %d outside [32, 64], %d with goal != last observation", bad_len, bad_goal)};
}

Outcome streaming_coverage() {
  std::ostringstream detail;
  bool pass = true;
  const std::size_t sizes[] = {1800, 9000, 18000, 54000, 99000};
  int i = 0;
  for (std::size_t n : sizes) {
    const double half_minutes = static_cast<double>(n / 2) / (60.0 * kControlHz);
    const data::Dataset ref = oracle_play(half_minutes, 0.5, mix_seed(40, i));
    agents::CollectConfig rc;
    rc.policy = agents::PlayPolicy::Random;
    rc.minutes = half_minutes;
    rc.episode_minutes = 0.5;
    rc.seed = mix_seed(41, i);
    rc.random = agents::random_stats_from(data::compute_norm_stats(ref));
    const data::Dataset extra = agents::collect_play(sim::SceneConfig{}, rc).dataset;
    ++i;

    const coverage::CoverageGrid grid = coverage::build_grid(ref);
    const coverage::Segment segs[] = {{"reference", &ref}, {"random", &extra}};
    const coverage::CoverageCurve curve = coverage::coverage_curve(segs, grid, 1);
    const auto brute = oracle::BruteCoverage(ref).curve({&ref, &extra});
    std::size_t mismatches = brute.size() == curve.points.size() ? 0 : 1;
    for (std::size_t k = 0; k < std::min(brute.size(), curve.points.size()); ++k) {
      if (curve.points[k].unique != brute[k] || curve.points[k].frames != k + 1) ++mismatches;
    }
    pass = pass && mismatches == 0 && brute.size() == n;
    detail << (i > 1 ? "; " : "") << n << " frames: " << brute.back() << " bins, " << mismatches << " mismatches";
  }
  return {pass, detail.str()};
}

Outcome determinism(const fs::path& work) {
  const auto t0 = Clock::now();
  std::vector<std::string> reports;
  std::string failure;
  for (int run = 0; run < 2 && failure.empty(); ++run) {
    const fs::path root = work / ("determinism_" + std::to_string(run));
    fs::remove_all(root);
    const std::string r = root.string();
    const std::string created = "2000-01-01T00:00:00Z";
    const std::vector<std::vector<std::string>> steps = {
        {"collect", "--minutes", "2", "--created", created},
        {"train-bc", "--data", "play_oracle", "--steps", "500"},
        {"clone", "--source", "play_oracle", "--episodes", "5", "--created", created},
        {"train-lfp", "--data", "play_oracle", "--data", "cloned", "--stats-from", "play_oracle", "--steps", "500"},
        {"eval", "--trials", "5"},
    };
    for (const auto& s : steps) {
      std::vector<std::string> args{"playclone", "--seed", "11", "--data-root", r};
      args.insert(args.end(), s.begin(), s.end());
      std::ostringstream out, err;
      const int code = cli::run(args, out, err);
      if (code != 0) {
        failure = s[0] + " exited " + std::to_string(code) + ": " + err.str();
        break;
      }
    }
    if (failure.empty()) {
      std::ifstream is(root / "reports/eval.csv", std::ios::binary);
      std::stringstream ss;
      ss << is.rdbuf();
      reports.push_back(ss.str());
    }
  }
  const double secs = seconds_since(t0);
  if (!failure.empty()) return {false, failure};
  const bool same = reports[0] == reports[1] && !reports[0].empty();
  return {same && secs < 20 * 60.0,
          fmt("two runs %s (%zu bytes) in %.1f s", same ? "byte-identical" : "DIFFER", reports[0].size(), secs)};
}

Outcome expert_success() {
  sim::SceneConfig scene;
  bench::ExpertActor expert(scene);
  const bench::EvalReport r = bench::run_eval(scene, expert, 100, 6, "expert");
  double worst = 2.0;
  std::string worst_task;
  for (const auto& t : r.tasks) {
    if (t.rate() < worst) {
      worst = t.rate();
      worst_task = std::string(sim::task_name(t.task));
    }
  }
  return {worst >= 0.95, fmt("lowest per-task rate %.2f (%s) over 100 seeds; average %.3f", worst,
                             worst_task.c_str(), r.average)};
}

Outcome quantize_round_trip() {
  const data::Dataset d = oracle_play(2.0, 1.0, 7);
  const data::NormStats stats = data::compute_norm_stats(d);
  const data::ActionQuantizer q(stats);
  Rng rng(8);
  long off_bin = 0, rebinned = 0;
  for (int i = 0; i < 100000; ++i) {
    data::ActVec a;
    for (int k = 0; k < sim::kActDim; ++k) {
      const double lo = stats.min[sim::kObsDim + k];
      const double hi = stats.max[sim::kObsDim + k];
      a[k] = uniform(rng, lo - 0.1 * (hi - lo), hi + 0.1 * (hi - lo));
    }
    const data::Bins b = q.quantize(a);
    const data::ActVec r = q.dequantize(b);
    for (int k = 0; k < sim::kActDim; ++k) {
      const double clamped = std::clamp(a[k], stats.min[sim::kObsDim + k], stats.max[sim::kObsDim + k]);
      if (std::abs(r[k] - clamped) > q.bin_width(k)) ++off_bin;
    }
    if (q.quantize(r) != b) ++rebinned;
  }
  return {off_bin == 0 && rebinned == 0,
          fmt("1e5 actions: %ld coordinates more than one bin away, %ld re-quantized differently", off_bin, rebinned)};
}

// ---- 8..12: sweeps ----

struct SweepResult {
  bench::SweepSpec spec;
  std::vector<bench::SweepRow> rows;
  std::map<double, double> mean;         // success, averaged over seeds
  std::map<double, double> unique;       // unique bins, averaged over seeds
  std::map<double, double> std_error;
  int failed = 0;
  double seconds = 0.0;  // wall clock of the first, uncached run
};

class Sweeps {
 public:
  Sweeps(fs::path cache, fs::path reports) : cache_(std::move(cache)), reports_(std::move(reports)) {
    base_ = cli::sweep_config(cli::RunConfig{});
  }

  const SweepResult& get(bench::SweepKind kind) {
    auto it = results_.find(kind);
    if (it != results_.end()) return it->second;
    SweepResult r;
    r.spec = bench::default_sweep(kind);
    const auto t0 = Clock::now();
    r.rows = bench::run_sweep(r.spec, base_, cache_);
    fs::create_directories(reports_);
    std::ofstream(reports_ / ("sweep_" + std::string(bench::sweep_name(kind)) + ".csv"))
        << bench::format_sweep_csv(r.spec, r.rows);
    for (const auto& s : bench::summarize(r.rows)) {
      r.mean[s.point] = s.mean;
      r.std_error[s.point] = s.std_error;
    }
    std::map<double, int> n;
    for (const auto& row : r.rows) {
      if (!row.ok) {
        ++r.failed;
        continue;
      }
      r.unique[row.point] += static_cast<double>(row.unique_bins);
      ++n[row.point];
    }
    for (auto& [p, u] : r.unique) u /= n[p];
    // Later runs reuse cached checkpoints, so the first run's time is kept.
    const fs::path timing = cache_ / ("seconds_" + std::string(bench::sweep_name(kind)) + ".txt");
    if (std::ifstream is(timing); !(is >> r.seconds)) {
      r.seconds = seconds_since(t0);
      std::ofstream(timing) << r.seconds << '\n';
    }
    std::cerr << "sweep " << bench::sweep_name(kind) << " finished in " << fmt("%.0f", seconds_since(t0)) << " s\n";
    return results_.emplace(kind, std::move(r)).first->second;
  }

  const bench::BaseConfig& base() const { return base_; }

 private:
  fs::path cache_, reports_;
  bench::BaseConfig base_;
  std::map<bench::SweepKind, SweepResult> results_;
};

std::string series(const std::map<double, double>& m, const std::map<double, double>* se = nullptr) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [p, v] : m) {
    os << (first ? "" : ", ") << p << ':';
    if (se == nullptr) {
      os << fmt("%.0f", v);
    } else {
      os << fmt("%.1f+-%.1f%%", 100 * v, 100 * se->at(p));
    }
    first = false;
  }
  return os.str();
}

Outcome clones_beat_human_only(Sweeps& sw) {
  const auto& r = sw.get(bench::SweepKind::DataQuantity);
  const double top = r.spec.grid.back();
  const double gain = r.mean.at(top) - r.mean.at(0.0);
  return {r.failed == 0 && gain >= 0.05 && r.seconds <= 4 * 3600.0,
          fmt("success by clone hours {%s}; gain at %g h = %+.1f points; sweep took %.0f s",
              series(r.mean, &r.std_error).c_str(), top, 100 * gain, r.seconds)};
}

Outcome random_below_clones(Sweeps& sw) {
  const auto& clones = sw.get(bench::SweepKind::DataQuantity);
  const auto& random = sw.get(bench::SweepKind::RandomBaseline);
  bool below = true, non_increasing = true;
  double prev = 2.0;
  for (const auto& [p, v] : random.mean) {
    if (clones.mean.count(p) && v > clones.mean.at(p)) below = false;
    if (v > prev) non_increasing = false;
    prev = v;
  }
  return {random.failed == 0 && below && non_increasing,
          fmt("random {%s} vs cloned {%s}; %s, %s", series(random.mean, &random.std_error).c_str(), series(clones.mean, &clones.std_error).c_str(),
              below ? "never above" : "ABOVE at some point", non_increasing ? "non-increasing" : "INCREASES")};
}

Outcome capacity_order(Sweeps& sw) {
  const auto& r = sw.get(bench::SweepKind::Capacity);
  const auto& caps = sw.base().capacities;
  std::size_t big = 0, small = 0;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    const auto size = [&](std::size_t j) { return caps[j].layers * caps[j].width; };
    if (size(i) > size(big)) big = i;
    if (size(i) < size(small)) small = i;
  }
  const double a = r.mean.at(static_cast<double>(big));
  const double b = r.mean.at(static_cast<double>(small));
  return {r.failed == 0 && a > b, fmt("%dx%d Play-BC %.1f%% vs %dx%d %.1f%% (all: {%s})", caps[big].layers,
                                      caps[big].width, 100 * a, caps[small].layers, caps[small].width, 100 * b,
                                      series(r.mean, &r.std_error).c_str())};
}

Outcome clone_length_order(Sweeps& sw) {
  const auto& r = sw.get(bench::SweepKind::CloneLength);
  bool ok = true;
  double prev = -1.0;
  for (const auto& [p, v] : r.mean) {
    if (v < prev) ok = false;
    prev = v;
  }
  return {r.failed == 0 && ok, fmt("success by clone episode seconds {%s}", series(r.mean, &r.std_error).c_str())};
}

Outcome coverage_growth(Sweeps& sw) {
  const auto& dq = sw.get(bench::SweepKind::DataQuantity);
  const auto& cl = sw.get(bench::SweepKind::CloneLength);
  bool increasing = true;
  double prev = -1.0;
  for (const auto& [p, u] : dq.unique) {
    if (u <= prev) increasing = false;
    prev = u;
  }
  const double human_hours = sw.base().human_minutes / 60.0;
  const double top = dq.spec.grid.back();
  const double human_rate = dq.unique.at(0.0) / human_hours;
  const double clone_rate = (dq.unique.at(top) - dq.unique.at(0.0)) / top;
  bool shorter_more = true;
  prev = 1e300;
  for (const auto& [p, u] : cl.unique) {
    if (u > prev) shorter_more = false;
    prev = u;
  }
  const bool pass = dq.failed == 0 && cl.failed == 0 && increasing && human_rate > clone_rate && shorter_more;
  return {pass, fmt("(a) bins by clone hours {%s} %s; (b) reference %.0f bins/h vs cloned %.0f bins/h; "
                    "(c) bins by episode seconds {%s} %s",
                    series(dq.unique).c_str(), increasing ? "strictly increasing" : "NOT strictly increasing",
                    human_rate, clone_rate, series(cl.unique).c_str(),
                    shorter_more ? "non-increasing" : "NOT non-increasing")};
}

}  // namespace

int main(int argc, char** argv) {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"acceptance criteria"};
  std::string work = (fs::temp_directory_path() / "playclone_acceptance").string();
  std::vector<int> only;
  std::string report;
  app.add_option("--work", work, "directory for sweep caches and reports (reused across runs)");
  app.add_option("--report", report, "also write the criterion lines to this file");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  set_log_sink([](LogLevel l, const std::string& m) {
    if (l == LogLevel::Warn) std::cerr << "warning: " << m << '\n';
  });

  const fs::path root = work;
  fs::create_directories(root);
  Sweeps sweeps(root / "sweep_cache", root / "reports");

  struct Criterion {
    int id;
    double budget_s;  // 0: no wall-clock limit checked here
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, 120, gradient_check},
      {2, 60, modl_normalization},
      {3, 60, window_bounds},
      {4, 120, streaming_coverage},
      {5, 1200, [&] { return determinism(root); }},
      {6, 600, expert_success},
      {7, 60, quantize_round_trip},
      {8, 0, [&] { return clones_beat_human_only(sweeps); }},
      {9, 0, [&] { return random_below_clones(sweeps); }},
      {10, 0, [&] { return capacity_order(sweeps); }},
      {11, 0, [&] { return clone_length_order(sweeps); }},
      {12, 0, [&] { return coverage_growth(sweeps); }},
  };

  std::ofstream report_file;
  if (!report.empty()) report_file.open(report);
  auto emit = [&](const std::string& line) {
    std::cout << line << std::endl;
    if (report_file) report_file << line << std::endl;
  };

  int passed = 0, run = 0;
  for (const auto& [id, budget, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (budget > 0 && secs >= budget) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", budget);
    }
    ++run;
    passed += o.pass ? 1 : 0;
    emit("criterion " + std::to_string(id) + ": " + (o.pass ? "PASS" : "FAIL") + "  " + o.detail +
         fmt("  [%.1f s]", secs));
  }
  emit(std::to_string(passed) + "/" + std::to_string(run) + " criteria passed");
  return 0;
}
