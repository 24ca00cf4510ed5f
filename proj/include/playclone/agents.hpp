#pragma once

#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "playclone/playdata.hpp"
#include "playclone/sim.hpp"
#include "playclone/tasks.hpp"

namespace playclone::agents {

using sim::Action;
using sim::EnvState;
using sim::SceneConfig;

// One controller set-point. Targets are re-evaluated every tick so they can
// follow moving objects (drawer handle, block).
struct Setpoint {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();
  std::array<double, 3> rpy{};
  double fingers = 0.0;
  double pos_tol = 0.006;
  double angle_tol = 0.02;
  double finger_tol = 0.02;
};

using Waypoint = std::function<Setpoint(const EnvState&)>;

struct Gains {
  double position = 0.6;
  double angle = 0.6;
  double finger = 0.8;
};

// Proportional controller toward a set-point, clamped to the action bounds.
Action track(const SceneConfig& cfg, const EnvState& s, const Setpoint& sp, const Gains& g);
bool reached(const EnvState& s, const Setpoint& sp);

// A fixed script of waypoints executed in order.
class Script {
 public:
  Script() = default;
  explicit Script(std::vector<Waypoint> wps) : wps_(std::move(wps)) {}
  bool done() const { return next_ >= wps_.size(); }
  // Advances past every waypoint already reached, then returns the action for the current one.
  Action act(const SceneConfig& cfg, const EnvState& s, const Gains& g);

 private:
  std::vector<Waypoint> wps_;
  std::size_t next_ = 0;
};

enum class Primitive {
  Wander,
  Reach,
  Grasp,
  Lift,
  Place,
  OpenDrawer,
  CloseDrawer,
  OpenSlider,
  CloseSlider,
  PressRed,
  PressGreen,
  PressBlue,
  SweepLeft,
  SweepRight,
  RotateLeft,
  RotateRight,
  ShelfIn,
  ShelfOut,
  StandUp,
  Knock,
};

constexpr int kNumPrimitives = 20;
std::string_view primitive_name(Primitive p);
const std::array<Primitive, kNumPrimitives>& all_primitives();

// Waypoint script for one primitive, given the state it starts from. rng draws
// the primitive's free parameters (targets, angles, heights).
Script make_primitive(const SceneConfig& cfg, Primitive p, const EnvState& s, Rng& rng);

struct OracleConfig {
  double wander_prob = 0.1;  // remaining mass spread uniformly over the other primitives
  int primitive_tick_limit = 240;
  double action_noise = 0.1;  // std of Gaussian noise as a fraction of each action bound
  Gains gains;
  std::uint64_t seed = 0;
};

struct PrimitiveLogEntry {
  std::int64_t tick = 0;
  Primitive primitive{};
};

class Oracle {
 public:
  Oracle(const SceneConfig& cfg, OracleConfig oc);
  Action act(const EnvState& s);
  Primitive current() const { return current_; }
  const std::vector<PrimitiveLogEntry>& log() const { return log_; }

 private:
  void switch_primitive(const EnvState& s);

  const SceneConfig* cfg_;
  OracleConfig oc_;
  Rng rng_;
  Script script_;
  Primitive current_ = Primitive::Wander;
  int ticks_in_primitive_ = 0;
  std::int64_t tick_ = 0;
  bool started_ = false;
  std::vector<PrimitiveLogEntry> log_;
};

// Scripted per-task expert used to validate the task predicates.
class TaskExpert {
 public:
  TaskExpert(const SceneConfig& cfg, sim::TaskId task, const EnvState& initial);
  Action act(const EnvState& s);

 private:
  const SceneConfig* cfg_;
  Script script_;
  Gains gains_;
};

struct RandomPolicyStats {
  std::array<double, sim::kActDim> mean{}, std{}, clip_low{}, clip_high{};
};

// Moments and [min, max] clip bounds of the reference dataset's actions.
RandomPolicyStats random_stats_from(const data::NormStats& s);
// Throws InvalidArgument if clip_low > mean, mean > clip_high or std < 0 in any dimension.
void validate(const RandomPolicyStats& st);
Action random_act(const RandomPolicyStats& st, Rng& rng);

enum class PlayPolicy { Oracle, Random };

struct CollectConfig {
  PlayPolicy policy = PlayPolicy::Oracle;
  double minutes = 30.0;
  double episode_minutes = 1.0;
  std::uint64_t seed = 0;
  OracleConfig oracle;
  RandomPolicyStats random;  // used when policy == Random
  std::string created;       // header timestamp; empty means now
};

struct CollectResult {
  data::Dataset dataset;
  std::vector<std::vector<PrimitiveLogEntry>> primitive_logs;  // per episode, oracle only
};

// ceil(minutes / episode_minutes) episodes, minutes*60*hz frames in total.
CollectResult collect_play(const SceneConfig& cfg, const CollectConfig& cc);

std::string format_primitive_log(const std::vector<PrimitiveLogEntry>& log);

}  // namespace playclone::agents
