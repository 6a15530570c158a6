#pragma once

#include "herlase/rl/trainer.hpp"
#include "herlase/skills/bundle.hpp"

#include <random>
#include <vector>

namespace herlase::baselines {

using rl::Matrix;
using rl::Vector;

/// HER with Gaussian action noise only. Shares every code path with
/// herlase_train; epsilon is pinned to 0 because nothing is gated on it.
rl::TrainResult her_baseline_train(const env::TaskSpec& task, const rl::TrainConfig& cfg, std::uint64_t seed,
                                   const rl::EpochCallback& on_epoch = {});

/// Raw meta-actor output: one logit per skill followed by a 3-d sub-goal
/// slice per skill, all in [-1, 1]. Sub-goal slices map affinely onto the
/// workspace box.
struct PasAction {
  Vector values;
  int skill_count = 0;

  PasAction() = default;
  PasAction(Vector v, int skills);

  Eigen::Ref<const Vector> logits() const { return values.head(skill_count); }
  int skill() const;
  /// Workspace sub-goal of skill k.
  env::Vec3 subgoal(int k) const;
  env::Vec3 active_subgoal() const { return subgoal(skill()); }

  static int dimension(int skills) { return 4 * skills; }
};

struct MacroTransition {
  Vector state;
  Vector goal;
  PasAction action;
  /// Sum of the primitive rewards collected while the skill ran.
  double reward = 0.0;
  Vector next_state;
  bool done = false;
  int primitive_steps = 0;
};

/// Critic input for the chosen action: skill one-hot and its sub-goal in
/// raw [-1,1] coordinates.
Vector pas_critic_action(const PasAction& a);

struct PasConfig {
  /// Probability of replacing the meta-action with a uniform random one.
  double random_action_prob = 0.3;
};

struct PasAgent {
  int skill_count = 0;
  rl::Normalizer obs_norm;
  rl::Normalizer goal_norm;
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Mlp target_actor;
  nn::Mlp target_critic;
  double gamma = 0.98;
  double min_return = -1.0;

  static PasAgent create(int obs_dim, int goal_dim, int skills, const std::vector<int>& hidden, double gamma,
                         double min_return, std::uint64_t seed);
  PasAction act(const Vector& obs, const Vector& goal) const;
};

struct PasResult {
  PasAgent agent;
  rl::TrainingLog log;
};

/// Runs one meta-action from `start`: the chosen skill acts until its
/// sub-goal is reached, its step budget is used, the task goal is achieved
/// or the episode ends.
MacroTransition execute_macro(const env::TaskSpec& task, const std::vector<skills::SkillBundle>& skills,
                              const env::WorldState& start, const env::Vec3& goal, const PasAction& action,
                              int& episode_step, env::WorldState& end_state, bool& episode_done);

/// DDPG over the parameterized skill action space, one transition per skill
/// execution, discount applied per macro step, no hindsight relabelling.
/// The discrete choice is trained straight-through: the critic sees the
/// one-hot of the argmax and the gradient wrt the one-hot is passed to the
/// logits unchanged.
PasResult pas_train(const env::TaskSpec& task, const std::vector<skills::SkillBundle>& skills,
                    const rl::TrainConfig& cfg, const PasConfig& pas, std::uint64_t seed,
                    const std::function<void(const rl::EpochLog&)>& on_epoch = {});

}  // namespace herlase::baselines
