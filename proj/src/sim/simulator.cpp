#include <algorithm>
#include <cmath>
#include <numbers>

#include "playclone/sim.hpp"

namespace playclone::sim {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kShelfSnapTol = 0.01;

double wrap_half_turn(double a) {
  if (a >= -kHalfPi && a < kHalfPi) return a;
  double w = a - std::numbers::pi * std::floor((a + kHalfPi) / std::numbers::pi);
  if (w >= kHalfPi) w -= std::numbers::pi;
  return w;
}

double vertical_half_extent(const SceneConfig& cfg, const Eigen::Matrix3d& r) {
  return std::abs(r(2, 0)) * cfg.block_half[0] + std::abs(r(2, 1)) * cfg.block_half[1] +
         std::abs(r(2, 2)) * cfg.block_half[2];
}

struct Footprint {
  Eigen::Vector2d axis0;  // heading direction
  Eigen::Vector2d axis1;
  double half0 = 0.0;
  double half1 = 0.0;
  double height = 0.0;
  bool upright = false;
};

// Assumes the block has been settled into one of its two canonical resting poses.
Footprint footprint(const SceneConfig& cfg, const EnvState& s) {
  Footprint f;
  const double h = s.block_pose[5];
  f.upright = s.block_pose[4] == kHalfPi;
  f.axis0 = {std::cos(h), std::sin(h)};
  f.axis1 = {-std::sin(h), std::cos(h)};
  f.half0 = f.upright ? cfg.block_half[2] : cfg.block_half[0];
  f.half1 = cfg.block_half[1];
  f.height = 2.0 * (f.upright ? cfg.block_half[0] : cfg.block_half[2]);
  return f;
}

// Snap an unsupported block to its nearest stable pose on the table or shelf.
void settle(const SceneConfig& cfg, EnvState& s) {
  auto& b = s.block_pose;
  bool up = false;
  double heading = 0.0;
  if (b[3] == 0.0 && b[4] == 0.0) {
    heading = wrap_half_turn(b[5]);
  } else if (b[3] == 0.0 && b[4] == kHalfPi) {
    up = true;
    heading = wrap_half_turn(b[5]);
  } else {
    const Eigen::Matrix3d r = rpy_to_matrix(b[3], b[4], b[5]);
    up = std::abs(r(2, 0)) >= std::sqrt(0.5);
    heading = up ? wrap_half_turn(std::atan2(r(1, 2), r(0, 2)))
                 : wrap_half_turn(std::atan2(r(1, 0), r(0, 0)));
  }
  const double half_h = up ? cfg.block_half[0] : cfg.block_half[2];
  const double bottom = b[2] - half_h;
  const bool over_shelf = cfg.shelf_x.contains(b[0]) && cfg.shelf_y.contains(b[1]);
  const double support =
      (over_shelf && bottom >= cfg.shelf_surface - kShelfSnapTol) ? cfg.shelf_surface : 0.0;
  b[2] = support + half_h;
  b[3] = 0.0;
  b[4] = up ? kHalfPi : 0.0;
  b[5] = heading;
}

// Side contact between the effector sphere and a resting block. An effector that
// ends inside the core footprint is top access only if it was already over the
// block on the previous tick; otherwise the face it came through is used.
void resolve_push(const SceneConfig& cfg, EnvState& s, const Eigen::Vector3d& eff_old) {
  const Footprint f = footprint(cfg, s);
  const double r = cfg.effector_radius;
  const double bottom = s.block_pose[2] - 0.5 * f.height;
  const double top = bottom + f.height;
  const double ez = s.arm_pose[2];
  if (ez >= top + r || ez <= bottom - r) return;

  const Eigen::Vector2d d(s.arm_pose[0] - s.block_pose[0], s.arm_pose[1] - s.block_pose[1]);
  const double l0 = f.axis0.dot(d);
  const double l1 = f.axis1.dot(d);
  if (std::abs(l0) >= f.half0 + r || std::abs(l1) >= f.half1 + r) return;
  double out0 = std::abs(l0) - f.half0;
  double out1 = std::abs(l1) - f.half1;
  double sign0 = l0, sign1 = l1;
  if (out0 <= 0.0 && out1 <= 0.0) {
    const Eigen::Vector2d d_old(eff_old.x() - s.block_pose[0], eff_old.y() - s.block_pose[1]);
    const double o0 = f.axis0.dot(d_old);
    const double o1 = f.axis1.dot(d_old);
    if (std::abs(o0) <= f.half0 && std::abs(o1) <= f.half1) return;  // top access, no push
    out0 = std::abs(o0) - f.half0;
    out1 = std::abs(o1) - f.half1;
    sign0 = o0;
    sign1 = o1;
  }

  const bool along0 = out0 >= out1;
  const double side = (along0 ? sign0 : sign1) >= 0.0 ? 1.0 : -1.0;
  const double q = side * (along0 ? l0 : l1);  // may be negative after crossing the centre line
  const double half = along0 ? f.half0 : f.half1;
  const Eigen::Vector2d axis = along0 ? f.axis0 : f.axis1;
  const Eigen::Vector2d push_dir = -side * axis;
  const double dist = half + r - q;

  if (f.upright && ez >= bottom + cfg.tip_fraction * f.height) {
    const Eigen::Vector2d eff(s.arm_pose[0], s.arm_pose[1]);
    const Eigen::Vector2d c = eff + push_dir * (cfg.block_half[0] + r);
    s.block_pose[0] = c.x();
    s.block_pose[1] = c.y();
    s.block_pose[2] = bottom + cfg.block_half[2];
    s.block_pose[3] = 0.0;
    s.block_pose[4] = 0.0;
    s.block_pose[5] = wrap_half_turn(std::atan2(push_dir.y(), push_dir.x()));
  } else {
    s.block_pose[0] += push_dir.x() * dist;
    s.block_pose[1] += push_dir.y() * dist;
  }
  s.block_pose[0] = cfg.block_xy.clamp(s.block_pose[0]);
  s.block_pose[1] = cfg.block_xy.clamp(s.block_pose[1]);
}

}  // namespace

Obs EnvState::flat() const {
  Obs o{};
  std::copy(arm_pose.begin(), arm_pose.end(), o.begin());
  std::copy(gripper.begin(), gripper.end(), o.begin() + 6);
  std::copy(block_pose.begin(), block_pose.end(), o.begin() + 8);
  o[idx::kDrawer] = drawer;
  o[idx::kSlider] = slider;
  std::copy(buttons.begin(), buttons.end(), o.begin() + idx::kButtonRed);
  return o;
}

EnvState EnvState::from_flat(std::span<const double> v) {
  if (v.size() != static_cast<std::size_t>(kObsDim)) {
    throw Error(ErrorKind::WidthMismatch,
                "observation width: expected 19, got " + std::to_string(v.size()));
  }
  EnvState s;
  std::copy(v.begin(), v.begin() + 6, s.arm_pose.begin());
  std::copy(v.begin() + 6, v.begin() + 8, s.gripper.begin());
  std::copy(v.begin() + 8, v.begin() + 14, s.block_pose.begin());
  s.drawer = v[idx::kDrawer];
  s.slider = v[idx::kSlider];
  std::copy(v.begin() + idx::kButtonRed, v.end(), s.buttons.begin());
  return s;
}

ActVec Action::flat() const {
  ActVec a{};
  std::copy(delta_pose.begin(), delta_pose.end(), a.begin());
  std::copy(delta_gripper.begin(), delta_gripper.end(), a.begin() + 6);
  return a;
}

Action Action::from_flat(std::span<const double> v) {
  if (v.size() != static_cast<std::size_t>(kActDim)) {
    throw Error(ErrorKind::WidthMismatch,
                "action width: expected 8, got " + std::to_string(v.size()));
  }
  Action a;
  std::copy(v.begin(), v.begin() + 6, a.delta_pose.begin());
  std::copy(v.begin() + 6, v.end(), a.delta_gripper.begin());
  return a;
}

std::array<Range, kObsDim> SceneConfig::state_ranges() const {
  const Range full_turn{-std::numbers::pi, std::numbers::pi};
  const Range half_turn{-kHalfPi, kHalfPi};
  return {work_x,   work_y,    work_z,    arm_roll,  arm_pitch, arm_yaw, finger,
          finger,   block_xy,  block_xy,  block_z,   full_turn, half_turn, full_turn,
          Range{0.0, drawer_max}, Range{0.0, slider_max}, Range{0.0, button_max},
          Range{0.0, button_max}, Range{0.0, button_max}};
}

std::array<Range, kActDim> SceneConfig::action_bounds() const {
  const Range p{-max_delta_pos, max_delta_pos};
  const Range a{-max_delta_angle, max_delta_angle};
  const Range g{-max_delta_finger, max_delta_finger};
  return {p, p, p, a, a, a, g, g};
}

void SceneConfig::validate() const {
  int i = 0;
  for (const Range& r : state_ranges()) {
    if (!(r.hi > r.lo)) {
      throw Error(ErrorKind::InvalidArgument,
                  "scene: degenerate range for state coordinate " + std::to_string(i));
    }
    ++i;
  }
  for (const Range& r : action_bounds()) {
    if (!(r.hi > r.lo)) throw Error(ErrorKind::InvalidArgument, "scene: degenerate action bound");
  }
  if (!(shelf_x.hi > shelf_x.lo) || !(shelf_y.hi > shelf_y.lo) || !(shelf_top > shelf_surface)) {
    throw Error(ErrorKind::InvalidArgument, "scene: degenerate shelf region");
  }
  if (control_hz <= 0) throw Error(ErrorKind::InvalidArgument, "scene: control rate must be > 0");
  if (task_budget < 0) throw Error(ErrorKind::InvalidArgument, "scene: negative task budget");
  if (!(grasp_radius > 0.0) || !(effector_radius > 0.0) || !(handle_radius > 0.0) ||
      !(button_radius > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "scene: radii must be positive");
  }
  if (!(press_threshold > 0.0 && press_threshold <= button_max)) {
    throw Error(ErrorKind::InvalidArgument, "scene: press threshold outside (0, button_max]");
  }
}

Eigen::Matrix3d rpy_to_matrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

std::array<double, 3> matrix_to_rpy(const Eigen::Matrix3d& r) {
  const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
  const double pitch = std::asin(sp);
  if (std::sqrt(r(2, 1) * r(2, 1) + r(2, 2) * r(2, 2)) > 1e-9) {
    return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
  }
  return {0.0, pitch, std::atan2(-r(0, 1), r(1, 1))};
}

bool is_grasped(const SceneConfig& cfg, const EnvState& s) {
  if (s.gripper[0] < cfg.grasp_angle || s.gripper[1] < cfg.grasp_angle) return false;
  return (s.effector() - s.block()).norm() <= cfg.grasp_radius;
}

bool block_upright(const SceneConfig& cfg, const EnvState& s) {
  const auto& b = s.block_pose;
  const Eigen::Matrix3d r = rpy_to_matrix(b[3], b[4], b[5]);
  return std::abs(r(2, 0)) >= std::cos(cfg.upright_tol);
}

bool block_flat(const SceneConfig& cfg, const EnvState& s) {
  const auto& b = s.block_pose;
  const Eigen::Matrix3d r = rpy_to_matrix(b[3], b[4], b[5]);
  return std::abs(r(2, 2)) >= std::cos(cfg.flat_tol);
}

bool block_in_shelf(const SceneConfig& cfg, const EnvState& s) {
  const auto& b = s.block_pose;
  return cfg.shelf_x.contains(b[0]) && cfg.shelf_y.contains(b[1]) && b[2] >= cfg.shelf_surface &&
         b[2] <= cfg.shelf_top;
}

bool block_on_table(const SceneConfig& cfg, const EnvState& s) {
  const auto& b = s.block_pose;
  const double half_h = vertical_half_extent(cfg, rpy_to_matrix(b[3], b[4], b[5]));
  return std::abs(b[2] - half_h) <= 1e-6;
}

double block_heading(const EnvState& s) {
  const auto& b = s.block_pose;
  if (b[3] == 0.0 && (b[4] == 0.0 || b[4] == kHalfPi)) return wrap_half_turn(b[5]);
  const Eigen::Matrix3d r = rpy_to_matrix(b[3], b[4], b[5]);
  if (std::abs(r(2, 0)) >= std::sqrt(0.5)) return wrap_half_turn(std::atan2(r(1, 2), r(0, 2)));
  return wrap_half_turn(std::atan2(r(1, 0), r(0, 0)));
}

double heading_diff(double to, double from) { return wrap_half_turn(to - from); }

Eigen::Vector3d drawer_handle_at(const SceneConfig& cfg, double drawer) {
  return {cfg.drawer_handle[0], cfg.drawer_handle[1] - drawer, cfg.drawer_handle[2]};
}

Eigen::Vector3d slider_handle_at(const SceneConfig& cfg, double slider) {
  return {cfg.slider_handle[0] + slider, cfg.slider_handle[1], cfg.slider_handle[2]};
}

Eigen::Vector3d button_top(const SceneConfig& cfg, Button b) {
  const Point2 p = cfg.button_xy[static_cast<int>(b)];
  return {p.x, p.y, cfg.button_max};
}

std::optional<int> find_invalid(const SceneConfig& cfg, const EnvState& s) {
  const Obs o = s.flat();
  const auto ranges = cfg.state_ranges();
  for (int i = 0; i < kObsDim; ++i) {
    if (!std::isfinite(o[i]) || !ranges[i].contains(o[i])) return i;
  }
  return std::nullopt;
}

Action clamp_action(const SceneConfig& cfg, const Action& a) {
  const auto bounds = cfg.action_bounds();
  ActVec v = a.flat();
  for (int i = 0; i < kActDim; ++i) {
    v[i] = std::isfinite(v[i]) ? bounds[i].clamp(v[i]) : 0.0;
  }
  return Action::from_flat(v);
}

void place_block_on_table(const SceneConfig& cfg, EnvState& s, double x, double y, double heading,
                          bool upright) {
  s.block_pose = {x, y, upright ? cfg.block_half[0] : cfg.block_half[2], 0.0,
                  upright ? kHalfPi : 0.0, wrap_half_turn(heading)};
}

void place_block_on_shelf(const SceneConfig& cfg, EnvState& s, double x, double y,
                          double heading) {
  s.block_pose = {x, y, cfg.shelf_surface + cfg.block_half[2], 0.0, 0.0, wrap_half_turn(heading)};
}

EnvState sample_rest_state(const SceneConfig& cfg, Rng& rng) {
  EnvState s;
  s.arm_pose = {uniform(rng, -0.7, 0.7), uniform(rng, -0.7, 0.7), uniform(rng, 0.1, 0.5), 0.0, 0.0,
                uniform(rng, -0.5, 0.5)};
  s.gripper = {0.0, 0.0};
  const double kind = uniform(rng, 0.0, 1.0);
  const double heading = uniform(rng, -kHalfPi, kHalfPi);
  if (kind < 0.15) {
    place_block_on_shelf(cfg, s, uniform(rng, cfg.shelf_x.lo + 0.08, cfg.shelf_x.hi - 0.08),
                         uniform(rng, cfg.shelf_y.lo + 0.08, cfg.shelf_y.hi - 0.08), heading);
  } else {
    place_block_on_table(cfg, s, uniform(rng, -0.6, 0.6), uniform(rng, -0.3, 0.3), heading,
                         kind < 0.3);
  }
  s.drawer = uniform(rng, 0.0, cfg.drawer_max);
  s.slider = uniform(rng, 0.0, cfg.slider_max);
  s.buttons = {0.0, 0.0, 0.0};
  return s;
}

EnvState step_state(const SceneConfig& cfg, const EnvState& s, const Action& raw) {
  const Action a = clamp_action(cfg, raw);
  const auto ranges = cfg.state_ranges();
  const bool grasped_before = is_grasped(cfg, s);

  EnvState n = s;
  for (int i = 0; i < 6; ++i) n.arm_pose[i] = ranges[i].clamp(s.arm_pose[i] + a.delta_pose[i]);
  for (int i = 0; i < 2; ++i) n.gripper[i] = cfg.finger.clamp(s.gripper[i] + a.delta_gripper[i]);

  const Eigen::Vector3d eff_old = s.effector();
  const Eigen::Vector3d eff_new = n.effector();
  const Eigen::Vector3d moved = eff_new - eff_old;

  if ((eff_old - drawer_handle_at(cfg, s.drawer)).norm() <= cfg.handle_radius) {
    n.drawer = std::clamp(s.drawer - moved.y(), 0.0, cfg.drawer_max);
  }
  if ((eff_old - slider_handle_at(cfg, s.slider)).norm() <= cfg.handle_radius) {
    n.slider = std::clamp(s.slider + moved.x(), 0.0, cfg.slider_max);
  }

  const bool still_closed = n.gripper[0] >= cfg.grasp_angle && n.gripper[1] >= cfg.grasp_angle;
  if (grasped_before && still_closed) {
    const bool rotated = n.arm_pose[3] != s.arm_pose[3] || n.arm_pose[4] != s.arm_pose[4] ||
                         n.arm_pose[5] != s.arm_pose[5];
    if (!rotated) {
      for (int i = 0; i < 3; ++i) n.block_pose[i] = s.block_pose[i] + moved[i];
    } else {
      const Eigen::Matrix3d re_old = rpy_to_matrix(s.arm_pose[3], s.arm_pose[4], s.arm_pose[5]);
      const Eigen::Matrix3d re_new = rpy_to_matrix(n.arm_pose[3], n.arm_pose[4], n.arm_pose[5]);
      const Eigen::Matrix3d rb = rpy_to_matrix(s.block_pose[3], s.block_pose[4], s.block_pose[5]);
      const Eigen::Matrix3d rel_r = re_old.transpose() * rb;
      const Eigen::Vector3d rel_p = re_old.transpose() * (s.block() - eff_old);
      const Eigen::Vector3d p = eff_new + re_new * rel_p;
      const auto rpy = matrix_to_rpy(re_new * rel_r);
      n.block_pose = {p.x(), p.y(), p.z(), rpy[0], rpy[1], rpy[2]};
    }
    n.block_pose[0] = cfg.block_xy.clamp(n.block_pose[0]);
    n.block_pose[1] = cfg.block_xy.clamp(n.block_pose[1]);
    n.block_pose[2] = cfg.block_z.clamp(n.block_pose[2]);
  } else {
    settle(cfg, n);
    if (!grasped_before) {
      resolve_push(cfg, n, eff_old);
      settle(cfg, n);
    }
  }

  for (int b = 0; b < 3; ++b) {
    const Point2 c = cfg.button_xy[b];
    const double dx = eff_new.x() - c.x;
    const double dy = eff_new.y() - c.y;
    double pressed = 0.0;
    if (dx * dx + dy * dy <= cfg.button_radius * cfg.button_radius) {
      pressed = std::clamp(cfg.button_max - eff_new.z(), 0.0, cfg.button_max);
    }
    n.buttons[b] = std::max(pressed, std::max(0.0, s.buttons[b] - cfg.button_relax));
  }
  return n;
}

Simulator::Simulator(SceneConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

const EnvState& Simulator::reset(const EnvState& initial) {
  if (auto bad = find_invalid(cfg_, initial)) {
    throw Error(ErrorKind::InvalidState,
                "invalid EnvState: coordinate " + std::to_string(*bad) + " out of range");
  }
  state_ = initial;
  return *state_;
}

const EnvState& Simulator::reset(std::uint64_t seed) {
  Rng rng(seed);
  state_ = sample_rest_state(cfg_, rng);
  return *state_;
}

const EnvState& Simulator::step(const Action& a) {
  if (!state_) throw Error(ErrorKind::Uninitialized, "uninitialized environment: step before reset");
  state_ = step_state(cfg_, *state_, a);
  return *state_;
}

const EnvState& Simulator::observe() const {
  if (!state_) throw Error(ErrorKind::Uninitialized, "uninitialized environment: observe before reset");
  return *state_;
}

}  // namespace playclone::sim
