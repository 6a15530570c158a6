#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace herlase::env {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;

class InvalidAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TaskId { reach, grasp, transfer, pick_and_move, put_inside, stack, take_out, put_inside_high_wall };

std::string_view to_string(TaskId id);
TaskId task_from_string(std::string_view name);

/// Vertical wall segment lying in the plane {axis == position}, spanning
/// [lo, hi] along the other horizontal axis, from the floor up to `height`.
struct Wall {
  int axis = 0;
  double position = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double height = 0.0;
};

/// Axis-aligned footprint an object can rest on after release.
struct Support {
  double center_x = 0.0;
  double center_y = 0.0;
  double half_size = 0.0;
  double top_z = 0.0;
};

/// Scalar parameters of the desk-scale world. Distances in workspace units
/// ([0,1]^3).
struct WorldParams {
  double step_scale = 0.05;
  double grasp_radius = 0.05;
  double tolerance = 0.05;
  double put_inside_tolerance = 0.08;
  double support_band = 0.02;
  double contact_band = 0.02;
  double wall_height = 0.1;
  double high_wall_height = 1.0;
  int max_episode_steps = 50;
  Vec3 container_center{0.7, 0.7, 0.0};
  double container_half_size = 0.1;
  Vec3 stack_base{0.3, 0.7, 0.0};
  double stack_base_height = 0.05;
  double stack_base_half_size = 0.04;
};

struct WorldState {
  Vec3 gripper_pos = Vec3::Zero();
  Vec3 gripper_vel = Vec3::Zero();
  double aperture = 1.0;
  Vec3 object_pos = Vec3::Zero();
  Vec3 object_vel = Vec3::Zero();
  bool attached = false;

  bool operator==(const WorldState&) const = default;
};

/// Observation layout shared by every task:
///   [0,3) gripper position   [3,6) gripper velocity   [6] aperture
///   [7] attached flag        [8,11) object position   [11,14) object velocity
///   [14,17) object position relative to the gripper
inline constexpr int kObservationDim = 17;
inline constexpr int kGoalDim = 3;
inline constexpr int kActionDim = 4;
inline constexpr int kGripperPos = 0;
inline constexpr int kGripperVel = 3;
inline constexpr int kAperture = 6;
inline constexpr int kAttached = 7;
inline constexpr int kObjectPos = 8;
inline constexpr int kObjectVel = 11;
inline constexpr int kRelative = 14;

Eigen::VectorXd observe(const WorldState& s);

/// (dx, dy, dz, grip_command), every component clipped to [-1, 1].
/// grip_command < 0 closes (attaches an object within grasp radius),
/// > 0 opens (releases), == 0 leaves the gripper as is.
struct Action {
  Vec4 values = Vec4::Zero();

  Action() = default;
  explicit Action(const Vec4& v);
  Action(double dx, double dy, double dz, double grip);
};

struct TaskSpec {
  TaskId id = TaskId::reach;
  WorldParams params;
  double tolerance = 0.05;
  std::vector<Wall> walls;
  std::vector<Support> supports;
  /// put_inside variants: achieved z must be within support_band of the floor.
  bool require_on_floor = false;
  /// stack: horizontal tolerance plus a vertical contact band around the goal.
  bool require_contact = false;

  std::string name() const { return std::string(to_string(id)); }
  int max_episode_steps() const { return params.max_episode_steps; }
};

TaskSpec make_task(TaskId id, const WorldParams& params = {});

struct StepResult {
  WorldState next_state;
  double reward = -1.0;
  bool success = false;
  bool done = false;
  Vec3 achieved_goal = Vec3::Zero();
};

/// Samples a start state and goal from the task's initial distribution.
std::pair<WorldState, Vec3> reset(const TaskSpec& task, std::uint64_t seed);

/// Pure kinematic transition: moves the gripper (blocked by walls and the
/// workspace box), carries an attached object, then applies the grip command.
WorldState transition(const TaskSpec& task, const WorldState& state, const Action& action);

/// One environment step taken at index `step_index` (0-based) of an episode.
StepResult step(const TaskSpec& task, const WorldState& state, const Vec3& goal, const Action& action,
                int step_index);

double reward(const Eigen::Ref<const Eigen::VectorXd>& achieved, const Eigen::Ref<const Eigen::VectorXd>& desired,
              const TaskSpec& task);
double reward(const Vec3& achieved, const Vec3& desired, const TaskSpec& task);

Vec3 achieved_goal(const WorldState& state, const TaskSpec& task);
/// Achieved goal read from an observation vector.
Vec3 achieved_goal(const Eigen::Ref<const Eigen::VectorXd>& observation, const TaskSpec& task);

/// True when the open segment from `from` to `to` passes through a wall
/// below its height.
bool crosses_wall(const Wall& wall, const Vec3& from, const Vec3& to);

/// Stateful wrapper that tracks the episode step count.
class Environment {
 public:
  explicit Environment(TaskSpec task) : task_(std::move(task)) {}

  const WorldState& reset(std::uint64_t seed);
  StepResult step(const Action& action);

  const TaskSpec& task() const { return task_; }
  const WorldState& state() const { return state_; }
  const Vec3& goal() const { return goal_; }
  int steps_taken() const { return t_; }

 private:
  TaskSpec task_;
  WorldState state_;
  Vec3 goal_ = Vec3::Zero();
  int t_ = 0;
};

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<WorldState>& states);

}  // namespace herlase::env
