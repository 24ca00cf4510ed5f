#include <doctest.h>

#include <cmath>
#include <set>

#include "playclone/agents.hpp"
#include "playclone/sim.hpp"
#include "playclone/tasks.hpp"

using namespace playclone;
using namespace playclone::sim;

TEST_SUITE("sim") {
  TEST_CASE("flat layouts round trip") {
    Rng rng(3);
    SceneConfig cfg;
    for (int i = 0; i < 50; ++i) {
      const EnvState s = sample_rest_state(cfg, rng);
      CHECK(EnvState::from_flat(s.flat()) == s);
    }
    Action a;
    a.delta_pose = {0.01, -0.02, 0.03, 0.04, -0.05, 0.06};
    a.delta_gripper = {0.1, -0.1};
    const ActVec v = a.flat();
    CHECK(v[0] == 0.01);
    CHECK(v[7] == -0.1);
    CHECK(Action::from_flat(v) == a);
  }

  TEST_CASE("reset(seed) is deterministic and valid") {
    Simulator a, b, c;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const EnvState& s = a.reset(seed);
      CHECK(s == b.reset(seed));
      CHECK_FALSE(find_invalid(SceneConfig{}, s).has_value());
    }
    std::set<double> xs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) xs.insert(c.reset(seed).block_pose[0]);
    CHECK(xs.size() > 10);
  }

  TEST_CASE("step before reset and invalid initial states") {
    Simulator env;
    CHECK_THROWS_AS(env.step(Action{}), Error);
    try {
      env.step(Action{});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Uninitialized);
    }
    EnvState bad = Simulator().reset(1);
    bad.drawer = 5.0;
    try {
      env.reset(bad);
      FAIL("expected InvalidState");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidState);
      CHECK(std::string(e.what()).find("14") != std::string::npos);
    }
  }

  TEST_CASE("actions are clamped to their bounds; non-finite values become zero") {
    SceneConfig cfg;
    Action a;
    a.delta_pose = {1.0, -1.0, 0.001, 5.0, -5.0, NAN};
    a.delta_gripper = {INFINITY, -0.01};
    const Action c = clamp_action(cfg, a);
    CHECK(c.delta_pose[0] == cfg.max_delta_pos);
    CHECK(c.delta_pose[1] == -cfg.max_delta_pos);
    CHECK(c.delta_pose[2] == 0.001);
    CHECK(c.delta_pose[3] == cfg.max_delta_angle);
    CHECK(c.delta_pose[4] == -cfg.max_delta_angle);
    CHECK(c.delta_pose[5] == 0.0);
    CHECK(c.delta_gripper[0] == 0.0);
    CHECK(c.delta_gripper[1] == -0.01);
  }

  TEST_CASE("free-space motion integrates the clamped deltas") {
    SceneConfig cfg;
    Simulator env(cfg);
    EnvState s = env.reset(7);
    s.arm_pose = {0.0, -0.2, 0.6, 0.0, 0.0, 0.0};
    s.gripper = {0.0, 0.0};
    env.reset(s);
    Action a;
    a.delta_pose = {0.5, 0.0, 0.0, 0.0, 0.0, 0.0};
    for (int i = 0; i < 10; ++i) env.step(a);
    CHECK(env.observe().arm_pose[0] == doctest::Approx(10 * cfg.max_delta_pos).epsilon(1e-12));
    CHECK(env.observe().arm_pose[1] == -0.2);
    // The workspace clamps position.
    for (int i = 0; i < 200; ++i) env.step(a);
    CHECK(env.observe().arm_pose[0] == cfg.work_x.hi);
  }

  TEST_CASE("zero action leaves a resting state unchanged") {
    Simulator env;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const EnvState s0 = env.reset(seed);
      for (int i = 0; i < 20; ++i) env.step(Action{});
      const EnvState& s = env.observe();
      CHECK(s.arm_pose == s0.arm_pose);
      CHECK(s.block_pose[0] == doctest::Approx(s0.block_pose[0]));
      CHECK(s.drawer == s0.drawer);
      CHECK(s.slider == s0.slider);
    }
  }

  TEST_CASE("rpy matrix round trip") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
      const double r = uniform(rng, -3.0, 3.0), p = uniform(rng, -1.5, 1.5), y = uniform(rng, -3.0, 3.0);
      const auto rpy = matrix_to_rpy(rpy_to_matrix(r, p, y));
      CHECK((rpy_to_matrix(rpy[0], rpy[1], rpy[2]) - rpy_to_matrix(r, p, y)).norm() < 1e-9);
    }
  }

  TEST_CASE("invalid scene configurations are rejected") {
    SceneConfig cfg;
    cfg.work_x = {1.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), Error);
    SceneConfig cfg2;
    cfg2.control_hz = 0;
    CHECK_THROWS_AS(cfg2.validate(), Error);
    CHECK_NOTHROW(SceneConfig{}.validate());
  }
}

TEST_SUITE("tasks") {
  TEST_CASE("task names round trip and unknown names list the valid ones") {
    std::set<std::string> names;
    for (TaskId t : all_tasks()) {
      names.insert(std::string(task_name(t)));
      CHECK(parse_task(task_name(t)) == t);
      CHECK(task_name(t).find(' ') == std::string_view::npos);
    }
    CHECK(names.size() == 18);
    try {
      parse_task("fly_away");
      FAIL("expected UnknownTask");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::UnknownTask);
      CHECK(std::string(e.what()).find("grasp_lift") != std::string::npos);
    }
  }

  TEST_CASE("instances are deterministic and start outside success") {
    SceneConfig cfg;
    for (TaskId t : all_tasks()) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const TaskInstance a = make_task_instance(cfg, t, seed);
        const TaskInstance b = make_task_instance(cfg, t, seed);
        CHECK(a.initial == b.initial);
        CHECK(a.goal == b.goal);
        CHECK(a.budget > 0);
        CHECK_FALSE(find_invalid(cfg, a.initial).has_value());
        const std::vector<EnvState> only{a.initial};
        CHECK_FALSE(task_success(cfg, t, only));
      }
    }
  }

  TEST_CASE("empty trajectory is rejected") {
    std::vector<EnvState> none;
    CHECK_THROWS_AS(task_success(SceneConfig{}, TaskId::Drawer, none), Error);
  }

  TEST_CASE("button press predicate follows the threshold") {
    SceneConfig cfg;
    Simulator env(cfg);
    EnvState s = env.reset(2);
    std::vector<EnvState> traj{s};
    s.buttons[1] = cfg.press_threshold * 0.5;
    traj.push_back(s);
    CHECK_FALSE(task_success(cfg, TaskId::PushGreenButton, traj));
    s.buttons[1] = cfg.press_threshold;
    traj.push_back(s);
    CHECK(task_success(cfg, TaskId::PushGreenButton, traj));
    CHECK(first_success_tick(cfg, TaskId::PushGreenButton, traj) == std::optional<std::size_t>(2));
    CHECK_FALSE(task_success(cfg, TaskId::PushRedButton, traj));
  }

  TEST_CASE("drawer predicate needs displacement, not just an open drawer") {
    SceneConfig cfg;
    const TaskInstance inst = make_task_instance(cfg, TaskId::Drawer, 4);
    std::vector<EnvState> traj{inst.initial};
    EnvState s = inst.initial;
    s.drawer = cfg.drawer_max;
    traj.push_back(s);
    CHECK(task_success(cfg, TaskId::Drawer, traj));
    CHECK_FALSE(task_success(cfg, TaskId::CloseDrawer, traj));
  }

  TEST_CASE("scripted experts solve every task on a handful of seeds") {
    SceneConfig cfg;
    for (TaskId t : all_tasks()) {
      int ok = 0;
      for (std::uint64_t seed = 100; seed < 105; ++seed) {
        const TaskInstance inst = make_task_instance(cfg, t, seed);
        agents::TaskExpert expert(cfg, t, inst.initial);
        Simulator env(cfg);
        TaskTracker tracker(cfg, t);
        tracker.update(env.reset(inst.initial));
        for (int i = 0; i < inst.budget && !tracker.succeeded(); ++i) tracker.update(env.step(expert.act(env.observe())));
        ok += tracker.succeeded() ? 1 : 0;
      }
      INFO(task_name(t));
      CHECK(ok >= 4);
    }
  }
}
