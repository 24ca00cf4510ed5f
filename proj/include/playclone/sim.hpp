#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "playclone/common.hpp"

namespace playclone::sim {

constexpr int kObsDim = 19;
constexpr int kRobotDim = 8;
constexpr int kEnvDim = 11;
constexpr int kActDim = 8;

using Obs = std::array<double, kObsDim>;
using ActVec = std::array<double, kActDim>;

// Flat observation layout: robot (8) then environment (11).
namespace idx {
constexpr int kArmX = 0, kArmY = 1, kArmZ = 2, kArmRoll = 3, kArmPitch = 4, kArmYaw = 5;
constexpr int kFinger0 = 6, kFinger1 = 7;
constexpr int kBlockX = 8, kBlockY = 9, kBlockZ = 10;
constexpr int kBlockRoll = 11, kBlockPitch = 12, kBlockYaw = 13;
constexpr int kDrawer = 14, kSlider = 15;
constexpr int kButtonRed = 16, kButtonGreen = 17, kButtonBlue = 18;
constexpr int kFirstEnv = kBlockX;
}  // namespace idx

enum class Button { Red = 0, Green = 1, Blue = 2 };

struct EnvState {
  std::array<double, 6> arm_pose{};  // x y z roll pitch yaw
  std::array<double, 2> gripper{};   // finger angles, 0 = open
  std::array<double, 6> block_pose{};
  double drawer = 0.0;
  double slider = 0.0;
  std::array<double, 3> buttons{};

  Obs flat() const;
  static EnvState from_flat(std::span<const double> v);

  Eigen::Vector3d effector() const { return {arm_pose[0], arm_pose[1], arm_pose[2]}; }
  Eigen::Vector3d block() const { return {block_pose[0], block_pose[1], block_pose[2]}; }

  bool operator==(const EnvState&) const = default;
};

struct Action {
  std::array<double, 6> delta_pose{};
  std::array<double, 2> delta_gripper{};

  ActVec flat() const;
  static Action from_flat(std::span<const double> v);
  bool operator==(const Action&) const = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  double span() const { return hi - lo; }
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Geometry and thresholds of the playroom. Lengths in meters, angles in radians.
struct SceneConfig {
  Range work_x{-1.0, 1.0}, work_y{-1.0, 1.0}, work_z{0.0, 1.0};
  Range arm_roll{-1.5707963267948966, 1.5707963267948966};
  Range arm_pitch{-1.5707963267948966, 1.5707963267948966};
  Range arm_yaw{-3.141592653589793, 3.141592653589793};
  Range finger{0.0, 1.0};
  double grasp_angle = 0.8;

  // Block: long axis is local x.
  std::array<double, 3> block_half{0.05, 0.02, 0.02};
  Range block_xy{-1.25, 1.25};
  Range block_z{-0.1, 1.1};

  double drawer_max = 0.25;
  double slider_max = 0.25;
  double button_max = 0.02;
  double press_threshold = 0.01;
  double button_radius = 0.05;
  double button_relax = 0.005;  // depth recovered per tick once released
  std::array<Point2, 3> button_xy{{{-0.3, 0.4}, {0.0, 0.4}, {0.3, 0.4}}};

  // Drawer handle at drawer = 0; moving the effector toward -y opens it.
  std::array<double, 3> drawer_handle{0.6, -0.6, 0.05};
  // Slider handle at slider = 0; moving toward +x opens it.
  std::array<double, 3> slider_handle{-0.7, 0.75, 0.15};
  double handle_radius = 0.06;

  // Shelf: raised platform behind the sliding door.
  Range shelf_x{0.15, 0.65}, shelf_y{0.6, 0.9};
  double shelf_surface = 0.25;
  double shelf_top = 0.45;

  double grasp_radius = 0.05;
  double effector_radius = 0.04;
  double lift_height = 0.15;
  double tip_fraction = 0.6;  // side contact above this fraction of an upright block's height tips it
  double upright_tol = 0.3;
  double flat_tol = 0.3;
  double rotate_threshold = 0.6;
  double sweep_distance = 0.2;

  double max_delta_pos = 0.03;
  double max_delta_angle = 0.1;
  double max_delta_finger = 0.15;

  int control_hz = kControlHz;
  int task_budget = 450;

  std::array<Range, kObsDim> state_ranges() const;
  std::array<Range, kActDim> action_bounds() const;
  // Throws Error(InvalidArgument) on degenerate ranges or a non-positive rate.
  void validate() const;
};

// ---- pure state predicates -------------------------------------------------

bool is_grasped(const SceneConfig& cfg, const EnvState& s);
bool block_upright(const SceneConfig& cfg, const EnvState& s);
bool block_flat(const SceneConfig& cfg, const EnvState& s);
bool block_in_shelf(const SceneConfig& cfg, const EnvState& s);
// Block resting on the table surface (not lifted, not on the shelf).
bool block_on_table(const SceneConfig& cfg, const EnvState& s);
// Heading of the block's long axis (or of local y when upright), modulo pi.
double block_heading(const EnvState& s);
// Difference of two headings wrapped to [-pi/2, pi/2).
double heading_diff(double to, double from);

Eigen::Vector3d drawer_handle_at(const SceneConfig& cfg, double drawer);
Eigen::Vector3d slider_handle_at(const SceneConfig& cfg, double slider);
Eigen::Vector3d button_top(const SceneConfig& cfg, Button b);

// Rotation from roll/pitch/yaw, R = Rz(yaw) Ry(pitch) Rx(roll).
Eigen::Matrix3d rpy_to_matrix(double roll, double pitch, double yaw);
std::array<double, 3> matrix_to_rpy(const Eigen::Matrix3d& r);

// Index of the first out-of-range coordinate, or nullopt.
std::optional<int> find_invalid(const SceneConfig& cfg, const EnvState& s);
Action clamp_action(const SceneConfig& cfg, const Action& a);

// Block at rest on the table at (x, y) with the given heading.
void place_block_on_table(const SceneConfig& cfg, EnvState& s, double x, double y, double heading,
                          bool upright = false);
void place_block_on_shelf(const SceneConfig& cfg, EnvState& s, double x, double y, double heading);

EnvState sample_rest_state(const SceneConfig& cfg, Rng& rng);

// The transition function. No state beyond EnvState is read or written.
EnvState step_state(const SceneConfig& cfg, const EnvState& s, const Action& a);

class Simulator {
 public:
  explicit Simulator(SceneConfig cfg = {});

  // Throws Error(InvalidState) naming the offending index.
  const EnvState& reset(const EnvState& initial);
  const EnvState& reset(std::uint64_t seed);
  // Out-of-bound actions are clamped. Throws Error(Uninitialized) before reset.
  const EnvState& step(const Action& a);
  const EnvState& observe() const;
  bool initialized() const { return state_.has_value(); }
  const SceneConfig& scene() const { return cfg_; }

 private:
  SceneConfig cfg_;
  std::optional<EnvState> state_;
};

}  // namespace playclone::sim
