#include <cmath>
#include <string>

#include "playclone/tasks.hpp"

namespace playclone::sim {

namespace {

constexpr std::array<std::string_view, kNumTasks> kNames = {
    "grasp_lift",        "grasp_upright",   "grasp_flat",       "drawer",
    "close_drawer",      "open_sliding",    "close_sliding",    "knock_object",
    "sweep_object",      "push_red_button", "push_green_button", "push_blue_button",
    "put_into_shelf",    "pull_out_of_shelf", "rotate_left",     "rotate_right",
    "sweep_left",        "sweep_right",
};

void block_on_table_area(const SceneConfig& cfg, EnvState& s, Rng& rng, double x_lim, double y_lim,
                         double heading_lim, bool upright = false) {
  place_block_on_table(cfg, s, uniform(rng, -x_lim, x_lim), uniform(rng, -y_lim, y_lim),
                       uniform(rng, -heading_lim, heading_lim), upright);
}

void arm_at(EnvState& s, const Eigen::Vector3d& p, double fingers) {
  s.arm_pose[0] = p.x();
  s.arm_pose[1] = p.y();
  s.arm_pose[2] = p.z();
  s.arm_pose[3] = 0.0;
  s.arm_pose[4] = 0.0;
  s.gripper = {fingers, fingers};
}

constexpr double kHalfPi = 1.5707963267948966;

}  // namespace

const std::array<TaskId, kNumTasks>& all_tasks() {
  static const std::array<TaskId, kNumTasks> tasks = [] {
    std::array<TaskId, kNumTasks> t{};
    for (int i = 0; i < kNumTasks; ++i) t[i] = static_cast<TaskId>(i);
    return t;
  }();
  return tasks;
}

std::string_view task_name(TaskId id) { return kNames[static_cast<int>(id)]; }

TaskId parse_task(std::string_view name) {
  for (int i = 0; i < kNumTasks; ++i) {
    if (kNames[i] == name) return static_cast<TaskId>(i);
  }
  std::string msg = "unknown task '" + std::string(name) + "'; valid tasks:";
  for (auto n : kNames) msg += " " + std::string(n);
  throw Error(ErrorKind::UnknownTask, msg);
}

EnvState sample_task_initial(const SceneConfig& cfg, TaskId task, std::uint64_t seed) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(task)));
  EnvState s = sample_rest_state(cfg, rng);
  // Most tasks start with the block resting flat in the central table area.
  block_on_table_area(cfg, s, rng, 0.5, 0.25, kHalfPi);
  switch (task) {
    case TaskId::GraspUpright:
    case TaskId::KnockObject:
      block_on_table_area(cfg, s, rng, 0.5, 0.25, kHalfPi, true);
      break;
    case TaskId::Drawer:
      s.drawer = uniform(rng, 0.0, 0.1 * cfg.drawer_max);
      break;
    case TaskId::CloseDrawer:
      s.drawer = uniform(rng, 0.9 * cfg.drawer_max, cfg.drawer_max);
      break;
    case TaskId::OpenSliding:
      s.slider = uniform(rng, 0.0, 0.1 * cfg.slider_max);
      break;
    case TaskId::CloseSliding:
      s.slider = uniform(rng, 0.9 * cfg.slider_max, cfg.slider_max);
      break;
    case TaskId::SweepLeft:
    case TaskId::SweepRight:
    case TaskId::SweepObject:
      block_on_table_area(cfg, s, rng, 0.35, 0.2, kHalfPi);
      break;
    case TaskId::PullOutOfShelf:
      place_block_on_shelf(cfg, s, uniform(rng, cfg.shelf_x.lo + 0.1, cfg.shelf_x.hi - 0.1),
                           uniform(rng, cfg.shelf_y.lo + 0.08, cfg.shelf_y.hi - 0.08),
                           uniform(rng, -kHalfPi, kHalfPi));
      break;
    case TaskId::RotateLeft:
    case TaskId::RotateRight:
      block_on_table_area(cfg, s, rng, 0.5, 0.25, 0.5);
      break;
    default:
      break;
  }
  return s;
}

TaskInstance make_task_instance(const SceneConfig& cfg, TaskId task, std::uint64_t seed) {
  TaskInstance inst;
  inst.task = task;
  inst.budget = cfg.task_budget;
  inst.initial = sample_task_initial(cfg, task, seed);
  Rng rng(mix_seed(seed, 1000 + static_cast<std::uint64_t>(task)));

  const EnvState& s0 = inst.initial;
  EnvState g = s0;
  const Eigen::Vector3d b = s0.block();
  const double h0 = block_heading(s0);
  const double r = cfg.effector_radius;
  switch (task) {
    case TaskId::GraspLift:
    case TaskId::GraspFlat:
    case TaskId::GraspUpright: {
      const bool up = task == TaskId::GraspUpright;
      place_block_on_table(cfg, g, b.x(), b.y(), h0, up);
      g.block_pose[2] = cfg.lift_height + 0.1;
      arm_at(g, g.block(), cfg.finger.hi);
      break;
    }
    case TaskId::Drawer:
      g.drawer = cfg.drawer_max;
      arm_at(g, drawer_handle_at(cfg, g.drawer), 0.0);
      break;
    case TaskId::CloseDrawer:
      g.drawer = 0.0;
      arm_at(g, drawer_handle_at(cfg, g.drawer), 0.0);
      break;
    case TaskId::OpenSliding:
      g.slider = cfg.slider_max;
      arm_at(g, slider_handle_at(cfg, g.slider), 0.0);
      break;
    case TaskId::CloseSliding:
      g.slider = 0.0;
      arm_at(g, slider_handle_at(cfg, g.slider), 0.0);
      break;
    case TaskId::KnockObject:
      place_block_on_table(cfg, g, b.x() - 0.15, b.y(), 0.0);
      arm_at(g, {b.x() - 0.15 + cfg.block_half[0] + r, b.y(), 0.08}, 0.0);
      break;
    case TaskId::SweepObject: {
      const double dir = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
      place_block_on_table(cfg, g, b.x(), b.y() + dir * 0.25, h0);
      arm_at(g, {b.x(), b.y() + dir * 0.25 - dir * (cfg.block_half[0] + r), 0.02}, 0.0);
      break;
    }
    case TaskId::SweepLeft:
    case TaskId::SweepRight: {
      const double dir = task == TaskId::SweepLeft ? -1.0 : 1.0;
      place_block_on_table(cfg, g, b.x() + dir * 0.3, b.y(), h0);
      arm_at(g, {b.x() + dir * 0.3 - dir * (cfg.block_half[0] + r), b.y(), 0.02}, 0.0);
      break;
    }
    case TaskId::PushRedButton:
    case TaskId::PushGreenButton:
    case TaskId::PushBlueButton: {
      const int which = static_cast<int>(task) - static_cast<int>(TaskId::PushRedButton);
      const Point2 p = cfg.button_xy[which];
      arm_at(g, {p.x, p.y, 0.0}, s0.gripper[0]);
      g.buttons[which] = cfg.button_max;
      break;
    }
    case TaskId::PutIntoShelf: {
      place_block_on_shelf(cfg, g, uniform(rng, cfg.shelf_x.lo + 0.1, cfg.shelf_x.hi - 0.1),
                           uniform(rng, cfg.shelf_y.lo + 0.08, cfg.shelf_y.hi - 0.08), h0);
      arm_at(g, {g.block_pose[0], g.block_pose[1], cfg.shelf_top + 0.05}, 0.0);
      break;
    }
    case TaskId::PullOutOfShelf:
      place_block_on_table(cfg, g, uniform(rng, -0.5, 0.5), uniform(rng, -0.25, 0.25), h0);
      arm_at(g, {g.block_pose[0], g.block_pose[1], 0.15}, 0.0);
      break;
    case TaskId::RotateLeft:
    case TaskId::RotateRight: {
      const double dir = task == TaskId::RotateLeft ? 1.0 : -1.0;
      place_block_on_table(cfg, g, b.x(), b.y(), h0 + dir * 0.9);
      arm_at(g, g.block(), cfg.finger.hi);
      g.arm_pose[5] = cfg.arm_yaw.clamp(s0.arm_pose[5] + dir * 0.9);
      break;
    }
  }
  inst.goal = g;
  return inst;
}

bool TaskTracker::holds(const EnvState& s) const {
  const SceneConfig& cfg = *cfg_;
  const EnvState& s0 = *start_;
  switch (task_) {
    case TaskId::GraspLift:
      return is_grasped(cfg, s) && s.block_pose[2] >= cfg.lift_height;
    case TaskId::GraspUpright:
      return is_grasped(cfg, s) && s.block_pose[2] >= cfg.lift_height && block_upright(cfg, s);
    case TaskId::GraspFlat:
      return is_grasped(cfg, s) && s.block_pose[2] >= cfg.lift_height && block_flat(cfg, s);
    case TaskId::Drawer:
      return s0.drawer <= 0.1 * cfg.drawer_max && s.drawer >= 0.9 * cfg.drawer_max;
    case TaskId::CloseDrawer:
      return s0.drawer >= 0.9 * cfg.drawer_max && s.drawer <= 0.1 * cfg.drawer_max;
    case TaskId::OpenSliding:
      return s0.slider <= 0.1 * cfg.slider_max && s.slider >= 0.9 * cfg.slider_max;
    case TaskId::CloseSliding:
      return s0.slider >= 0.9 * cfg.slider_max && s.slider <= 0.1 * cfg.slider_max;
    case TaskId::KnockObject:
      return block_upright(cfg, s0) && block_flat(cfg, s) && !is_grasped(cfg, s);
    case TaskId::SweepObject: {
      const double dx = s.block_pose[0] - s0.block_pose[0];
      const double dy = s.block_pose[1] - s0.block_pose[1];
      return !ever_grasped_ && block_on_table(cfg, s) &&
             std::hypot(dx, dy) >= cfg.sweep_distance;
    }
    case TaskId::SweepLeft:
      return !ever_grasped_ && block_on_table(cfg, s) &&
             s.block_pose[0] - s0.block_pose[0] <= -cfg.sweep_distance;
    case TaskId::SweepRight:
      return !ever_grasped_ && block_on_table(cfg, s) &&
             s.block_pose[0] - s0.block_pose[0] >= cfg.sweep_distance;
    case TaskId::PushRedButton:
      return s.buttons[0] >= cfg.press_threshold;
    case TaskId::PushGreenButton:
      return s.buttons[1] >= cfg.press_threshold;
    case TaskId::PushBlueButton:
      return s.buttons[2] >= cfg.press_threshold;
    case TaskId::PutIntoShelf:
      return !block_in_shelf(cfg, s0) && block_in_shelf(cfg, s) && !is_grasped(cfg, s);
    case TaskId::PullOutOfShelf:
      return block_in_shelf(cfg, s0) && block_on_table(cfg, s) && !is_grasped(cfg, s);
    case TaskId::RotateLeft:
      return heading_diff(block_heading(s), block_heading(s0)) >= cfg.rotate_threshold;
    case TaskId::RotateRight:
      return heading_diff(block_heading(s), block_heading(s0)) <= -cfg.rotate_threshold;
  }
  return false;
}

bool TaskTracker::update(const EnvState& s) {
  if (!start_) start_ = s;
  ever_grasped_ = ever_grasped_ || is_grasped(*cfg_, s);
  const bool ok = holds(s);
  succeeded_ = succeeded_ || ok;
  return ok;
}

std::optional<std::size_t> first_success_tick(const SceneConfig& cfg, TaskId task,
                                              std::span<const EnvState> traj) {
  if (traj.empty()) {
    throw Error(ErrorKind::InvalidArgument, "task_success: trajectory must be non-empty");
  }
  TaskTracker tracker(cfg, task);
  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (tracker.update(traj[t])) return t;
  }
  return std::nullopt;
}

bool task_success(const SceneConfig& cfg, TaskId task, std::span<const EnvState> traj) {
  return first_success_tick(cfg, task, traj).has_value();
}

}  // namespace playclone::sim
