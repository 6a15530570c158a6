#pragma once

#include "herlase/env/world.hpp"
#include "herlase/rl/actor_critic.hpp"
#include "herlase/rl/space.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace herlase::skills {

using rl::Vector;

inline constexpr int kDefaultMaxSkillSteps = 25;

/// A trained goal-conditioned skill policy together with the abstraction it
/// was trained in. All methods take full world observations.
struct Skill {
  env::TaskId id = env::TaskId::reach;
  rl::ActorCritic policy;
  rl::SpaceAdapter space;
  env::TaskSpec task;
  int max_skill_steps = kDefaultMaxSkillSteps;

  std::string name() const { return std::string(env::to_string(id)); }
  Vector action(const Vector& observation, const Vector& subgoal) const;
  env::Action env_action(const Vector& observation, const Vector& subgoal) const;
  /// Q^i(s, g_i, pi^i(s, g_i)) from the skill's own critic.
  double q_value(const Vector& observation, const Vector& subgoal) const;
  /// True when the skill's own reward says the sub-goal is achieved.
  bool achieved(const Vector& observation, const Vector& subgoal) const;

  void save(const std::filesystem::path& dir) const;
  static Skill load(const std::filesystem::path& dir);
};

Skill make_skill(env::TaskId id, rl::ActorCritic policy, const env::WorldParams& params = {});

struct SkillRollout {
  env::WorldState final_state;
  int steps = 0;
  bool success = false;
};

/// Runs the skill from `start` in `world` until the sub-goal is achieved or
/// max_skill_steps primitive steps have been taken.
SkillRollout execute_skill(const Skill& skill, const env::TaskSpec& world, const env::WorldState& start,
                           const env::Vec3& subgoal);

}  // namespace herlase::skills
