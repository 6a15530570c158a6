#include "herlase/env/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace herlase::env {

namespace {

constexpr double kWallClearance = 1e-6;

// Height band used for free-space goals and gripper starts.
constexpr double kMinXY = 0.05;
constexpr double kMaxXY = 0.95;
constexpr double kMaxGoalZ = 0.5;
constexpr double kMinLift = 0.1;
constexpr double kMaxLift = 0.3;
constexpr double kTouchOffset = 0.03;

Vec3 clip_to_workspace(const Vec3& p) { return p.cwiseMax(0.0).cwiseMin(1.0); }

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Vec3 free_point(double z_lo = 0.0, double z_hi = kMaxGoalZ) {
    const double x = uniform(kMinXY, kMaxXY);
    const double y = uniform(kMinXY, kMaxXY);
    return {x, y, uniform(z_lo, z_hi)};
  }

  Vec3 table_point() { return {uniform(kMinXY, kMaxXY), uniform(kMinXY, kMaxXY), 0.0}; }

  // Point on the table outside a square footprint grown by `margin`.
  Vec3 table_point_outside(const Vec3& center, double half_size, double margin) {
    for (;;) {
      Vec3 p = table_point();
      if (std::abs(p.x() - center.x()) > half_size + margin || std::abs(p.y() - center.y()) > half_size + margin) {
        return p;
      }
    }
  }

  Vec3 touch_offset() {
    for (;;) {
      Vec3 d{uniform(-kTouchOffset, kTouchOffset), uniform(-kTouchOffset, kTouchOffset), uniform(0.0, kTouchOffset)};
      if (d.norm() <= kTouchOffset) return d;
    }
  }

 private:
  std::mt19937_64 rng_;
};

std::vector<Wall> container_walls(const WorldParams& p, double first_wall_height) {
  const Vec3& c = p.container_center;
  const double h = p.container_half_size;
  return {
      {0, c.x() - h, c.y() - h, c.y() + h, first_wall_height},
      {0, c.x() + h, c.y() - h, c.y() + h, p.wall_height},
      {1, c.y() - h, c.x() - h, c.x() + h, p.wall_height},
      {1, c.y() + h, c.x() - h, c.x() + h, p.wall_height},
  };
}

double support_height(const TaskSpec& task, const Vec3& p) {
  double z = 0.0;
  for (const auto& s : task.supports) {
    if (std::abs(p.x() - s.center_x) <= s.half_size && std::abs(p.y() - s.center_y) <= s.half_size &&
        s.top_z <= p.z() + 1e-12) {
      z = std::max(z, s.top_z);
    }
  }
  return z;
}

bool is_object_task(TaskId id) { return id != TaskId::reach; }

}  // namespace

std::string_view to_string(TaskId id) {
  switch (id) {
    case TaskId::reach: return "reach";
    case TaskId::grasp: return "grasp";
    case TaskId::transfer: return "transfer";
    case TaskId::pick_and_move: return "pick_and_move";
    case TaskId::put_inside: return "put_inside";
    case TaskId::stack: return "stack";
    case TaskId::take_out: return "take_out";
    case TaskId::put_inside_high_wall: return "put_inside_high_wall";
  }
  return "reach";
}

TaskId task_from_string(std::string_view name) {
  for (TaskId id : {TaskId::reach, TaskId::grasp, TaskId::transfer, TaskId::pick_and_move, TaskId::put_inside,
                    TaskId::stack, TaskId::take_out, TaskId::put_inside_high_wall}) {
    if (to_string(id) == name) return id;
  }
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

Eigen::VectorXd observe(const WorldState& s) {
  Eigen::VectorXd o(kObservationDim);
  o.segment<3>(kGripperPos) = s.gripper_pos;
  o.segment<3>(kGripperVel) = s.gripper_vel;
  o[kAperture] = s.aperture;
  o[kAttached] = s.attached ? 1.0 : 0.0;
  o.segment<3>(kObjectPos) = s.object_pos;
  o.segment<3>(kObjectVel) = s.object_vel;
  o.segment<3>(kRelative) = s.object_pos - s.gripper_pos;
  return o;
}

Action::Action(const Vec4& v) {
  if (!v.allFinite()) throw InvalidAction("action has non-finite components");
  values = v.cwiseMax(-1.0).cwiseMin(1.0);
}

Action::Action(double dx, double dy, double dz, double grip) : Action(Vec4{dx, dy, dz, grip}) {}

TaskSpec make_task(TaskId id, const WorldParams& params) {
  TaskSpec t;
  t.id = id;
  t.params = params;
  t.tolerance = params.tolerance;
  switch (id) {
    case TaskId::put_inside:
      t.tolerance = params.put_inside_tolerance;
      t.require_on_floor = true;
      t.walls = container_walls(params, params.wall_height);
      break;
    case TaskId::put_inside_high_wall:
      t.tolerance = params.put_inside_tolerance;
      t.require_on_floor = true;
      t.walls = container_walls(params, params.high_wall_height);
      break;
    case TaskId::take_out:
      t.walls = container_walls(params, params.wall_height);
      break;
    case TaskId::stack:
      t.require_contact = true;
      t.supports.push_back({params.stack_base.x(), params.stack_base.y(), params.stack_base_half_size,
                            params.stack_base.z() + params.stack_base_height});
      break;
    default: break;
  }
  return t;
}

bool crosses_wall(const Wall& wall, const Vec3& from, const Vec3& to) {
  const int a = wall.axis;
  const int other = 1 - wall.axis;
  const double d0 = from[a] - wall.position;
  const double d1 = to[a] - wall.position;
  if (d0 == 0.0 && d1 == 0.0) return false;
  if ((d0 < 0.0) == (d1 < 0.0) && d0 != 0.0 && d1 != 0.0) return false;
  const double t = d0 / (d0 - d1);
  const Vec3 hit = from + t * (to - from);
  return hit[other] >= wall.lo && hit[other] <= wall.hi && hit.z() <= wall.height;
}

namespace {

// Moves from `from` towards `to`, stopping just short of the first wall hit.
Vec3 move_blocked(const std::vector<Wall>& walls, const Vec3& from, const Vec3& to) {
  double t_stop = 1.0;
  const Wall* hit_wall = nullptr;
  for (const auto& w : walls) {
    if (!crosses_wall(w, from, to)) continue;
    const double d0 = from[w.axis] - w.position;
    const double d1 = to[w.axis] - w.position;
    const double t = d0 / (d0 - d1);
    if (t < t_stop) {
      t_stop = t;
      hit_wall = &w;
    }
  }
  if (hit_wall == nullptr) return to;
  Vec3 p = from + t_stop * (to - from);
  const double side = from[hit_wall->axis] < hit_wall->position ? -1.0 : 1.0;
  p[hit_wall->axis] = hit_wall->position + side * kWallClearance;
  return clip_to_workspace(p);
}

}  // namespace

WorldState transition(const TaskSpec& task, const WorldState& state, const Action& action) {
  const WorldParams& p = task.params;
  WorldState next = state;
  const Vec3 target = clip_to_workspace(state.gripper_pos + p.step_scale * action.values.head<3>());
  next.gripper_pos = move_blocked(task.walls, state.gripper_pos, target);
  if (next.attached) next.object_pos = next.gripper_pos;

  const double grip = action.values[3];
  if (grip < 0.0 && !next.attached && (next.object_pos - next.gripper_pos).norm() <= p.grasp_radius) {
    next.attached = true;
    next.object_pos = next.gripper_pos;
  } else if (grip > 0.0 && next.attached) {
    next.attached = false;
    next.object_pos.z() = support_height(task, next.object_pos);
  }
  next.aperture = 0.5 * (grip + 1.0);
  next.gripper_vel = next.gripper_pos - state.gripper_pos;
  next.object_vel = next.object_pos - state.object_pos;
  return next;
}

double reward(const Vec3& achieved, const Vec3& desired, const TaskSpec& task) {
  if (!achieved.allFinite() || !desired.allFinite()) return -1.0;
  bool ok = false;
  if (task.require_contact) {
    ok = (achieved.head<2>() - desired.head<2>()).norm() <= task.tolerance &&
         std::abs(achieved.z() - desired.z()) <= task.params.contact_band;
  } else {
    ok = (achieved - desired).norm() <= task.tolerance;
    if (task.require_on_floor) ok = ok && achieved.z() <= task.params.support_band;
  }
  return ok ? 0.0 : -1.0;
}

double reward(const Eigen::Ref<const Eigen::VectorXd>& achieved, const Eigen::Ref<const Eigen::VectorXd>& desired,
              const TaskSpec& task) {
  if (achieved.size() != kGoalDim || desired.size() != kGoalDim) {
    throw DimensionMismatch("reward: goal vectors must have length 3");
  }
  return reward(Vec3(achieved), Vec3(desired), task);
}

Vec3 achieved_goal(const WorldState& state, const TaskSpec& task) {
  return is_object_task(task.id) ? state.object_pos : state.gripper_pos;
}

Vec3 achieved_goal(const Eigen::Ref<const Eigen::VectorXd>& observation, const TaskSpec& task) {
  if (observation.size() != kObservationDim) throw DimensionMismatch("achieved_goal: bad observation length");
  return is_object_task(task.id) ? Vec3(observation.segment<3>(kObjectPos))
                                 : Vec3(observation.segment<3>(kGripperPos));
}

StepResult step(const TaskSpec& task, const WorldState& state, const Vec3& goal, const Action& action,
                int step_index) {
  StepResult r;
  r.next_state = transition(task, state, action);
  r.achieved_goal = achieved_goal(r.next_state, task);
  r.reward = reward(r.achieved_goal, goal, task);
  r.success = r.reward == 0.0;
  r.done = r.success || step_index + 1 >= task.max_episode_steps();
  return r;
}

std::pair<WorldState, Vec3> reset(const TaskSpec& task, std::uint64_t seed) {
  const WorldParams& p = task.params;
  Sampler s(seed);
  WorldState w;
  Vec3 goal = Vec3::Zero();
  switch (task.id) {
    case TaskId::reach:
      w.gripper_pos = s.free_point(0.05);
      w.object_pos = s.table_point();
      goal = s.free_point();
      break;
    case TaskId::grasp:
      w.object_pos = s.table_point();
      w.gripper_pos = clip_to_workspace(w.object_pos + s.touch_offset());
      goal = {w.object_pos.x(), w.object_pos.y(), s.uniform(kMinLift, kMaxLift)};
      break;
    case TaskId::transfer:
      w.gripper_pos = s.free_point();
      w.object_pos = w.gripper_pos;
      w.attached = true;
      w.aperture = 0.0;
      goal = s.free_point();
      break;
    case TaskId::pick_and_move:
      w.gripper_pos = s.free_point(0.05);
      w.object_pos = s.table_point();
      do {
        goal = s.free_point();
      } while ((goal - w.object_pos).norm() <= 2.0 * task.tolerance);
      break;
    case TaskId::put_inside:
    case TaskId::put_inside_high_wall:
      w.gripper_pos = s.free_point(0.05);
      w.object_pos = s.table_point_outside(p.container_center, p.container_half_size, 0.05);
      goal = p.container_center;
      break;
    case TaskId::stack:
      w.gripper_pos = s.free_point(0.05);
      w.object_pos = s.table_point_outside(p.stack_base, p.stack_base_half_size, 0.05);
      goal = p.stack_base + Vec3{0.0, 0.0, p.stack_base_height};
      break;
    case TaskId::take_out: {
      const double inner = p.container_half_size - 0.03;
      w.object_pos = p.container_center + Vec3{s.uniform(-inner, inner), s.uniform(-inner, inner), 0.0};
      w.gripper_pos = w.object_pos;
      w.attached = true;
      w.aperture = 0.0;
      goal = s.free_point();
      while (std::abs(goal.x() - p.container_center.x()) <= p.container_half_size + task.tolerance &&
             std::abs(goal.y() - p.container_center.y()) <= p.container_half_size + task.tolerance) {
        goal = s.free_point();
      }
      break;
    }
  }
  return {w, goal};
}

const WorldState& Environment::reset(std::uint64_t seed) {
  auto [s, g] = env::reset(task_, seed);
  state_ = s;
  goal_ = g;
  t_ = 0;
  return state_;
}

StepResult Environment::step(const Action& action) {
  StepResult r = env::step(task_, state_, goal_, action, t_);
  state_ = r.next_state;
  ++t_;
  return r;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<WorldState>& states) {
  std::ofstream out(path);
  out << "t,gx,gy,gz,aperture,attached,ox,oy,oz\n";
  for (std::size_t t = 0; t < states.size(); ++t) {
    const auto& s = states[t];
    out << t << ',' << s.gripper_pos.x() << ',' << s.gripper_pos.y() << ',' << s.gripper_pos.z() << ','
        << s.aperture << ',' << (s.attached ? 1 : 0) << ',' << s.object_pos.x() << ',' << s.object_pos.y() << ','
        << s.object_pos.z() << '\n';
  }
}

}  // namespace herlase::env
