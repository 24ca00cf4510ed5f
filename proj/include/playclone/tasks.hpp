#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "playclone/sim.hpp"

namespace playclone::sim {

enum class TaskId {
  GraspLift,
  GraspUpright,
  GraspFlat,
  Drawer,
  CloseDrawer,
  OpenSliding,
  CloseSliding,
  KnockObject,
  SweepObject,
  PushRedButton,
  PushGreenButton,
  PushBlueButton,
  PutIntoShelf,
  PullOutOfShelf,
  RotateLeft,
  RotateRight,
  SweepLeft,
  SweepRight,
};

constexpr int kNumTasks = 18;

const std::array<TaskId, kNumTasks>& all_tasks();
std::string_view task_name(TaskId id);
// Throws Error(UnknownTask) listing all valid names.
TaskId parse_task(std::string_view name);

struct TaskInstance {
  TaskId task{};
  EnvState initial;
  EnvState goal;
  int budget = 0;
};

// Initial state satisfying the task's precondition; deterministic in (task, seed).
EnvState sample_task_initial(const SceneConfig& cfg, TaskId task, std::uint64_t seed);
TaskInstance make_task_instance(const SceneConfig& cfg, TaskId task, std::uint64_t seed);

// Incremental success check: feed states in order, the first one is the start state.
class TaskTracker {
 public:
  TaskTracker(const SceneConfig& cfg, TaskId task) : cfg_(&cfg), task_(task) {}
  // Returns whether the predicate holds at this tick.
  bool update(const EnvState& s);
  bool succeeded() const { return succeeded_; }

 private:
  bool holds(const EnvState& s) const;

  const SceneConfig* cfg_;
  TaskId task_;
  std::optional<EnvState> start_;
  bool ever_grasped_ = false;
  bool succeeded_ = false;
};

// Precondition: traj non-empty (throws InvalidArgument otherwise).
bool task_success(const SceneConfig& cfg, TaskId task, std::span<const EnvState> traj);
std::optional<std::size_t> first_success_tick(const SceneConfig& cfg, TaskId task,
                                              std::span<const EnvState> traj);

}  // namespace playclone::sim
