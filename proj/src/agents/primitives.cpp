#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>

#include "playclone/agents.hpp"

namespace playclone::agents {

namespace {

constexpr double kCruise = 0.25;
constexpr double kPushHeight = 0.02;
constexpr double kKnockHeight = 0.08;
constexpr double kShelfCarry = 0.4;
constexpr double kPitchUp = 1.45;

const std::array<Primitive, kNumPrimitives> kAll = {
    Primitive::Wander,     Primitive::Reach,       Primitive::Grasp,      Primitive::Lift,
    Primitive::Place,      Primitive::OpenDrawer,  Primitive::CloseDrawer, Primitive::OpenSlider,
    Primitive::CloseSlider, Primitive::PressRed,   Primitive::PressGreen, Primitive::PressBlue,
    Primitive::SweepLeft,  Primitive::SweepRight,  Primitive::RotateLeft, Primitive::RotateRight,
    Primitive::ShelfIn,    Primitive::ShelfOut,    Primitive::StandUp,    Primitive::Knock,
};

constexpr std::array<std::string_view, kNumPrimitives> kNames = {
    "wander",      "reach",      "grasp",       "lift",        "place",
    "open_drawer", "close_drawer", "open_slider", "close_slider", "press_red",
    "press_green", "press_blue", "sweep_left",  "sweep_right", "rotate_left",
    "rotate_right", "shelf_in",  "shelf_out",   "stand_up",    "knock",
};

Setpoint at(const Eigen::Vector3d& p, double yaw, double fingers, double pitch = 0.0) {
  Setpoint sp;
  sp.pos = p;
  sp.rpy = {0.0, pitch, yaw};
  sp.fingers = fingers;
  return sp;
}

bool upright(const EnvState& s) { return std::abs(s.block_pose[4]) > 0.7; }

double rest_half_height(const SceneConfig& cfg, const EnvState& s) {
  return upright(s) ? cfg.block_half[0] : cfg.block_half[2];
}

// Builders for the recurring sub-motions. `yaw` is the wrist yaw held throughout.
struct Plan {
  const SceneConfig& cfg;
  double yaw;
  std::vector<Waypoint> wps;

  void fixed(const Eigen::Vector3d& p, double fingers, double pitch = 0.0) {
    const Setpoint sp = at(p, yaw, fingers, pitch);
    wps.push_back([sp](const EnvState&) { return sp; });
  }

  // Rise vertically from wherever the effector is.
  void rise(double z, double fingers) {
    const double y = yaw;
    wps.push_back([y, z, fingers](const EnvState& s) {
      return at({s.arm_pose[0], s.arm_pose[1], z}, y, fingers, s.arm_pose[4]);
    });
  }

  void grasp() {
    const double y = yaw;
    rise(kCruise, 0.0);
    wps.push_back([y](const EnvState& s) { return at({s.block_pose[0], s.block_pose[1], kCruise}, y, 0.0); });
    wps.push_back([y](const EnvState& s) { return at(s.block(), y, 0.0); });
    wps.push_back([y](const EnvState& s) { return at(s.block(), y, 1.0); });
  }

  // Assumes the block is held; lowers it to resting height at (x, y) on a support of height `support`.
  void carry_and_release(double x, double y_pos, double support, double carry) {
    const double y = yaw;
    const SceneConfig* c = &cfg;
    rise(carry, 1.0);
    wps.push_back([=](const EnvState& s) {
      const Eigen::Vector3d off = s.effector() - s.block();
      return at(Eigen::Vector3d(x, y_pos, carry) + Eigen::Vector3d(off.x(), off.y(), 0.0), y, 1.0,
                s.arm_pose[4]);
    });
    wps.push_back([=](const EnvState& s) {
      const double dz = s.arm_pose[2] - s.block_pose[2];
      return at({s.arm_pose[0], s.arm_pose[1], support + rest_half_height(*c, s) + 0.005 + dz}, y, 1.0,
                s.arm_pose[4]);
    });
    wps.push_back([y](const EnvState& s) { return at(s.effector(), y, 0.0, s.arm_pose[4]); });
    rise(carry, 0.0);
  }

  void handle(bool drawer, double target) {
    const double y = yaw;
    const SceneConfig* c = &cfg;
    auto handle_pos = [c, drawer](double v) {
      return drawer ? sim::drawer_handle_at(*c, v) : sim::slider_handle_at(*c, v);
    };
    rise(0.3, 0.0);
    wps.push_back([=](const EnvState& s) {
      const Eigen::Vector3d h = handle_pos(drawer ? s.drawer : s.slider);
      return at({h.x(), h.y(), 0.3}, y, 0.0);
    });
    wps.push_back([=](const EnvState& s) { return at(handle_pos(drawer ? s.drawer : s.slider), y, 0.0); });
    wps.push_back([=](const EnvState&) { return at(handle_pos(target), y, 0.0); });
    rise(0.3, 0.0);
  }

  void press(int button) {
    const sim::Point2 p = cfg.button_xy[button];
    rise(0.15, 0.0);
    fixed({p.x, p.y, 0.15}, 0.0);
    fixed({p.x, p.y, 0.0}, 0.0);
    fixed({p.x, p.y, 0.15}, 0.0);
  }

  // Push the block until it has moved `distance` along +/- x (axis 0) or y (axis 1)
  // without grasping. The push runs through the block centre along whichever face
  // normal is closest to the wanted direction, so the block slides straight.
  void sweep(int axis, double dir, double distance) {
    const double y = yaw;
    const double standoff = 0.16;
    struct Memo {
      Eigen::Vector2d u = Eigen::Vector2d::Zero();
      double start = 0.0;
      bool set = false;
    };
    auto memo = std::make_shared<Memo>();
    auto init = [=](const EnvState& s) {
      if (memo->set) return;
      Eigen::Vector2d want = Eigen::Vector2d::Zero();
      want[axis] = dir;
      const double h = s.block_pose[5];
      const Eigen::Vector2d a0(std::cos(h), std::sin(h)), a1(-std::sin(h), std::cos(h));
      Eigen::Vector2d best = a0;
      for (const Eigen::Vector2d& c : {a0, Eigen::Vector2d(-a0), a1, Eigen::Vector2d(-a1)}) {
        if (c.dot(want) > best.dot(want)) best = c;
      }
      memo->u = best;
      memo->start = s.block_pose[axis];
      memo->set = true;
    };
    rise(kCruise, 0.0);
    wps.push_back([=](const EnvState& s) {
      init(s);
      const Eigen::Vector2d p = Eigen::Vector2d(s.block_pose[0], s.block_pose[1]) - standoff * memo->u;
      return at({p.x(), p.y(), kCruise}, y, 0.0);
    });
    wps.push_back([=](const EnvState& s) { return at({s.arm_pose[0], s.arm_pose[1], kPushHeight}, y, 0.0); });
    wps.push_back([=](const EnvState& s) {
      const bool far_enough = dir * (s.block_pose[axis] - memo->start) >= distance;
      const bool at_edge = std::max(std::abs(s.arm_pose[0]), std::abs(s.arm_pose[1])) >= 0.95;
      if (far_enough || at_edge) return at(s.effector(), s.arm_pose[5], s.gripper[0]);
      const Eigen::Vector2d c(s.block_pose[0], s.block_pose[1]);
      const Eigen::Vector2d e(s.arm_pose[0], s.arm_pose[1]);
      const Eigen::Vector2d p = c + memo->u * (memo->u.dot(e - c) + 0.05);
      return at({p.x(), p.y(), kPushHeight}, y, 0.0);
    });
    rise(kCruise, 0.0);
  }

  void rotate(double delta) {
    grasp();
    const double target = cfg.arm_yaw.clamp(yaw + delta);
    wps.push_back([target](const EnvState& s) { return at(s.effector(), target, 1.0); });
    wps.push_back([target](const EnvState& s) { return at(s.effector(), target, 0.0); });
    const double keep = yaw;
    yaw = target;
    rise(kCruise, 0.0);
    yaw = keep;
  }

  void knock(double heading) {
    const double y = yaw;
    const Eigen::Vector2d d(std::cos(heading), std::sin(heading));
    rise(kCruise, 0.0);
    auto origin = std::make_shared<std::optional<Eigen::Vector2d>>();
    wps.push_back([=](const EnvState& s) {
      if (!*origin) *origin = Eigen::Vector2d(s.block_pose[0], s.block_pose[1]);
      const Eigen::Vector2d p = **origin - 0.16 * d;
      return at({p.x(), p.y(), kCruise}, y, 0.0);
    });
    wps.push_back([=](const EnvState&) {
      const Eigen::Vector2d p = **origin - 0.16 * d;
      return at({p.x(), p.y(), kKnockHeight}, y, 0.0);
    });
    wps.push_back([=](const EnvState&) {
      const Eigen::Vector2d p = **origin + 0.08 * d;
      Setpoint sp = at({p.x(), p.y(), kKnockHeight}, y, 0.0);
      sp.pos_tol = 0.01;
      return sp;
    });
    rise(kCruise, 0.0);
  }

  void stand_up(double pitch) {
    grasp();
    rise(0.3, 1.0);
    wps.push_back([=, y = yaw](const EnvState& s) { return at(s.effector(), y, 1.0, pitch); });
    wps.push_back([=, y = yaw](const EnvState& s) {
      return at({s.arm_pose[0], s.arm_pose[1], 0.12 + (s.arm_pose[2] - s.block_pose[2])}, y, 1.0, pitch);
    });
    wps.push_back([=, y = yaw](const EnvState& s) { return at(s.effector(), y, 0.0, pitch); });
    rise(kCruise, 0.0);
    wps.push_back([y = yaw](const EnvState& s) { return at(s.effector(), y, 0.0, 0.0); });
  }
};

bool holding(const SceneConfig& cfg, const EnvState& s) { return sim::is_grasped(cfg, s); }

Eigen::Vector3d random_table_point(Rng& rng, double z) {
  return {uniform(rng, -0.6, 0.6), uniform(rng, -0.3, 0.3), z};
}

}  // namespace

std::string_view primitive_name(Primitive p) { return kNames[static_cast<int>(p)]; }
const std::array<Primitive, kNumPrimitives>& all_primitives() { return kAll; }

Action track(const SceneConfig& cfg, const EnvState& s, const Setpoint& sp, const Gains& g) {
  Action a;
  for (int i = 0; i < 3; ++i) a.delta_pose[i] = g.position * (sp.pos[i] - s.arm_pose[i]);
  for (int i = 0; i < 3; ++i) a.delta_pose[3 + i] = g.angle * (sp.rpy[i] - s.arm_pose[3 + i]);
  for (int i = 0; i < 2; ++i) a.delta_gripper[i] = g.finger * (sp.fingers - s.gripper[i]);
  return sim::clamp_action(cfg, a);
}

bool reached(const EnvState& s, const Setpoint& sp) {
  if ((s.effector() - sp.pos).norm() > sp.pos_tol) return false;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(s.arm_pose[3 + i] - sp.rpy[i]) > sp.angle_tol) return false;
  }
  for (int i = 0; i < 2; ++i) {
    if (std::abs(s.gripper[i] - sp.fingers) > sp.finger_tol) return false;
  }
  return true;
}

Action Script::act(const SceneConfig& cfg, const EnvState& s, const Gains& g) {
  while (next_ < wps_.size()) {
    const Setpoint sp = wps_[next_](s);
    if (!reached(s, sp)) return track(cfg, s, sp, g);
    ++next_;
  }
  return Action{};
}

Script make_primitive(const SceneConfig& cfg, Primitive p, const EnvState& s, Rng& rng) {
  Plan plan{cfg, s.arm_pose[5], {}};
  auto yaw_draw = [&] { return uniform(rng, -1.0, 1.0); };
  switch (p) {
    case Primitive::Wander: {
      plan.yaw = yaw_draw();
      const double fingers = uniform(rng, 0.0, 1.0) < 0.5 ? 0.0 : uniform(rng, 0.0, 1.0);
      plan.fixed({uniform(rng, -0.8, 0.8), uniform(rng, -0.8, 0.8), uniform(rng, 0.05, 0.6)}, fingers);
      break;
    }
    case Primitive::Reach: {
      plan.yaw = yaw_draw();
      const int which = std::uniform_int_distribution<int>(0, 3)(rng);
      Eigen::Vector3d target;
      if (which == 0) {
        target = s.block();
      } else if (which == 1) {
        target = sim::drawer_handle_at(cfg, s.drawer);
      } else if (which == 2) {
        target = sim::slider_handle_at(cfg, s.slider);
      } else {
        const auto b = cfg.button_xy[std::uniform_int_distribution<int>(0, 2)(rng)];
        target = {b.x, b.y, 0.0};
      }
      target.z() += uniform(rng, 0.1, 0.3);
      plan.rise(kCruise, s.gripper[0]);
      plan.fixed(target, 0.0);
      break;
    }
    case Primitive::Grasp:
      if (!holding(cfg, s)) plan.grasp();
      break;
    case Primitive::Lift:
      if (!holding(cfg, s)) plan.grasp();
      plan.rise(uniform(rng, 0.2, 0.45), 1.0);
      break;
    case Primitive::Place: {
      if (!holding(cfg, s)) plan.grasp();
      const Eigen::Vector3d t = random_table_point(rng, 0.0);
      plan.carry_and_release(t.x(), t.y(), 0.0, kCruise);
      break;
    }
    case Primitive::OpenDrawer:
      plan.handle(true, uniform(rng, 0.0, 1.0) < 0.7 ? cfg.drawer_max : uniform(rng, 0.5, 1.0) * cfg.drawer_max);
      break;
    case Primitive::CloseDrawer:
      plan.handle(true, uniform(rng, 0.0, 1.0) < 0.7 ? 0.0 : uniform(rng, 0.0, 0.5) * cfg.drawer_max);
      break;
    case Primitive::OpenSlider:
      plan.handle(false, uniform(rng, 0.0, 1.0) < 0.7 ? cfg.slider_max : uniform(rng, 0.5, 1.0) * cfg.slider_max);
      break;
    case Primitive::CloseSlider:
      plan.handle(false, uniform(rng, 0.0, 1.0) < 0.7 ? 0.0 : uniform(rng, 0.0, 0.5) * cfg.slider_max);
      break;
    case Primitive::PressRed:
    case Primitive::PressGreen:
    case Primitive::PressBlue:
      plan.press(static_cast<int>(p) - static_cast<int>(Primitive::PressRed));
      break;
    case Primitive::SweepLeft:
    case Primitive::SweepRight:
      if (uniform(rng, 0.0, 1.0) < 0.3) {
        plan.sweep(1, uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0, uniform(rng, 0.2, 0.35));
      } else {
        plan.sweep(0, p == Primitive::SweepLeft ? -1.0 : 1.0, uniform(rng, 0.25, 0.45));
      }
      break;
    case Primitive::RotateLeft:
      plan.rotate(uniform(rng, 0.7, 1.2));
      break;
    case Primitive::RotateRight:
      plan.rotate(-uniform(rng, 0.7, 1.2));
      break;
    case Primitive::ShelfIn: {
      if (!holding(cfg, s)) plan.grasp();
      plan.carry_and_release(uniform(rng, cfg.shelf_x.lo + 0.1, cfg.shelf_x.hi - 0.1),
                             uniform(rng, cfg.shelf_y.lo + 0.08, cfg.shelf_y.hi - 0.08), cfg.shelf_surface,
                             kShelfCarry);
      break;
    }
    case Primitive::ShelfOut: {
      if (!holding(cfg, s)) plan.grasp();
      const Eigen::Vector3d t = random_table_point(rng, 0.0);
      plan.carry_and_release(t.x(), t.y(), 0.0, kShelfCarry);
      break;
    }
    case Primitive::StandUp:
      plan.stand_up(uniform(rng, 0.0, 1.0) < 0.5 ? kPitchUp : -kPitchUp);
      break;
    case Primitive::Knock:
      plan.knock(uniform(rng, -3.14159, 3.14159));
      break;
  }
  return Script(std::move(plan.wps));
}

// ---- per-task experts ----------------------------------------------------------

TaskExpert::TaskExpert(const SceneConfig& cfg, sim::TaskId task, const EnvState& initial) : cfg_(&cfg) {
  using sim::TaskId;
  Plan plan{cfg, initial.arm_pose[5], {}};
  const EnvState& s = initial;
  switch (task) {
    case TaskId::GraspLift:
    case TaskId::GraspUpright:
    case TaskId::GraspFlat:
      plan.grasp();
      plan.rise(cfg.lift_height + 0.1, 1.0);
      break;
    case TaskId::Drawer:
      plan.handle(true, cfg.drawer_max);
      break;
    case TaskId::CloseDrawer:
      plan.handle(true, 0.0);
      break;
    case TaskId::OpenSliding:
      plan.handle(false, cfg.slider_max);
      break;
    case TaskId::CloseSliding:
      plan.handle(false, 0.0);
      break;
    case TaskId::KnockObject:
      plan.knock(0.0);
      break;
    case TaskId::SweepObject:
      plan.sweep(1, s.block_pose[1] > 0.0 ? -1.0 : 1.0, 0.3);
      break;
    case TaskId::SweepLeft:
      plan.sweep(0, -1.0, 0.3);
      break;
    case TaskId::SweepRight:
      plan.sweep(0, 1.0, 0.3);
      break;
    case TaskId::PushRedButton:
    case TaskId::PushGreenButton:
    case TaskId::PushBlueButton:
      plan.press(static_cast<int>(task) - static_cast<int>(TaskId::PushRedButton));
      break;
    case TaskId::PutIntoShelf:
      plan.grasp();
      plan.carry_and_release(0.5 * (cfg.shelf_x.lo + cfg.shelf_x.hi), 0.5 * (cfg.shelf_y.lo + cfg.shelf_y.hi),
                             cfg.shelf_surface, kShelfCarry);
      break;
    case TaskId::PullOutOfShelf:
      plan.grasp();
      plan.carry_and_release(0.0, 0.0, 0.0, kShelfCarry);
      break;
    case TaskId::RotateLeft:
      plan.rotate(0.9);
      break;
    case TaskId::RotateRight:
      plan.rotate(-0.9);
      break;
  }
  script_ = Script(std::move(plan.wps));
}

Action TaskExpert::act(const EnvState& s) { return script_.act(*cfg_, s, gains_); }

}  // namespace playclone::agents
