#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "playclone/benchmark.hpp"

using namespace playclone;
using namespace playclone::bench;

namespace {

BaseConfig tiny_base() {
  BaseConfig b;
  b.human_minutes = 1.0;
  for (pipeline::TrainConfig* t : {&b.bc, &b.lfp}) {
    t->spec.layers = 1;
    t->spec.width = 8;
    t->spec.mixtures = 2;
    t->batch = 2;
    t->steps = 3;
  }
  b.capacities = {{1, 8}, {1, 4}};
  b.clone_minutes = 0.5;
  b.clone_hours = 0.02;
  b.eval_trials = 1;
  return b;
}

}  // namespace

TEST_SUITE("benchmark") {
  TEST_CASE("sweep names") {
    for (SweepKind k : {SweepKind::DataQuantity, SweepKind::Capacity, SweepKind::CloneLength,
                        SweepKind::RandomBaseline}) {
      CHECK(parse_sweep(sweep_name(k)) == k);
      CHECK_FALSE(default_sweep(k).grid.empty());
      CHECK(default_sweep(k).seeds.size() >= 3);
    }
    CHECK(default_sweep(SweepKind::CloneLength).grid == std::vector<double>{6, 15, 60});
    CHECK(default_sweep(SweepKind::DataQuantity).grid == std::vector<double>{0, 2, 5, 10});
    CHECK_THROWS_AS(parse_sweep("volume"), Error);
  }

  TEST_CASE("expert evaluation is deterministic and its average recomputes from the rows") {
    sim::SceneConfig scene;
    ExpertActor a(scene), b(scene);
    const EvalReport r1 = run_eval(scene, a, 3, 42, "expert");
    const EvalReport r2 = run_eval(scene, b, 3, 42, "expert");
    CHECK(format_eval_csv(r1) == format_eval_csv(r2));
    REQUIRE(r1.tasks.size() == 18);
    double sum = 0;
    double var = 0;
    for (const auto& t : r1.tasks) {
      CHECK(t.trials == 3);
      CHECK(t.rate() >= 0.0);
      CHECK(t.rate() <= 1.0);
      sum += t.rate();
      var += t.rate() * (1 - t.rate()) / t.trials;
    }
    CHECK(r1.average == doctest::Approx(sum / 18));
    CHECK(r1.std_error == doctest::Approx(std::sqrt(var) / 18));
    CHECK(r1.average > 0.9);
    CHECK(r1.fingerprint == "expert");

    const std::string csv = format_eval_csv(r1);
    CHECK(csv.find("task,trials,successes,rate\n") != std::string::npos);
    CHECK(csv.find("\naverage,") != std::string::npos);
    CHECK(csv.find("grasp_lift,3,") != std::string::npos);
  }

  TEST_CASE("random actions rarely grasp") {
    sim::SceneConfig scene;
    agents::RandomPolicyStats st;
    for (int d = 0; d < sim::kActDim; ++d) {
      st.std[d] = 0.5 * scene.action_bounds()[d].hi;
      st.clip_low[d] = scene.action_bounds()[d].lo;
      st.clip_high[d] = scene.action_bounds()[d].hi;
    }
    RandomActor actor(st);
    const EvalReport r = run_eval(scene, actor, 5, 7, "random");
    int grasps = 0;
    for (const auto& t : r.tasks) {
      if (t.task == sim::TaskId::GraspLift || t.task == sim::TaskId::GraspUpright || t.task == sim::TaskId::GraspFlat) {
        grasps += t.successes;
      }
    }
    CHECK(grasps <= 1);
  }

  TEST_CASE("the LfP fingerprint changes with the evaluation settings") {
    pipeline::Policy p;
    p.kind = pipeline::PolicyKind::Lfp;
    seqnet::NetSpec s;
    s.input_width = 38;
    s.width = 4;
    s.layers = 1;
    p.params = seqnet::PolicyParams(s);
    pipeline::RolloutConfig r;
    const std::string a = policy_fingerprint(p, r, 5, 1);
    CHECK(a == policy_fingerprint(p, r, 5, 1));
    CHECK(a != policy_fingerprint(p, r, 6, 1));
    r.temperature = 0.5;
    CHECK(a != policy_fingerprint(p, r, 5, 1));
  }

  TEST_CASE("seed summaries use the spread across seeds") {
    std::vector<SweepRow> rows(4);
    const double avg[] = {0.2, 0.4, 0.3, 0.9};
    for (int i = 0; i < 4; ++i) {
      rows[i].point = i < 3 ? 1.0 : 2.0;
      rows[i].seed = static_cast<std::uint64_t>(i);
      rows[i].ok = true;
      rows[i].report.average = avg[i];
    }
    const auto s = summarize(rows);
    REQUIRE(s.size() == 2);
    CHECK(s[0].seeds == 3);
    CHECK(s[0].mean == doctest::Approx(0.3));
    // sample std 0.1, over sqrt(3)
    CHECK(s[0].std_error == doctest::Approx(0.1 / std::sqrt(3.0)));
    CHECK(s[1].seeds == 1);
    CHECK(s[1].std_error == 0.0);
  }

  TEST_CASE("a tiny sweep runs end to end, records failures and reuses its cache") {
    testutil::TempDir dir("sweep");
    testutil::LogCapture logs;
    SweepSpec spec;
    spec.kind = SweepKind::Capacity;
    spec.grid = {0, 7};  // 7 is not a capacity index
    spec.seeds = {1};
    const auto rows = run_sweep(spec, tiny_base(), dir.path());
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].ok);
    CHECK(rows[0].train_frames == 1800 + 2 * 900);
    CHECK(rows[0].unique_bins > 0);
    CHECK_FALSE(rows[1].ok);
    CHECK(rows[1].error.find("capacity") != std::string::npos);
    CHECK(logs.warnings.find("fewer than 3 seeds") != std::string::npos);

    const std::string csv = format_sweep_csv(spec, rows);
    CHECK(csv.rfind("# sweep=capacity\npoint,seed,status,average,std_error,train_frames,unique_bins,grasp_lift", 0) ==
          0);
    CHECK(csv.find("\n7,1,failed,") != std::string::npos);

    const auto again = run_sweep(spec, tiny_base(), dir.path());
    CHECK(format_sweep_csv(spec, again) == csv);
    CHECK(logs.infos.find("reusing") != std::string::npos);
  }

  TEST_CASE("a random-baseline point without extra hours trains on human play only") {
    SweepSpec spec;
    spec.kind = SweepKind::RandomBaseline;
    spec.grid = {0};
    spec.seeds = {2};
    testutil::LogCapture logs;
    const auto rows = run_sweep(spec, tiny_base());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ok);
    CHECK(rows[0].train_frames == 1800);
  }
}
