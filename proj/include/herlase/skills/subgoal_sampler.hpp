#pragma once

#include "herlase/env/world.hpp"

#include <Eigen/Dense>

#include <random>

namespace herlase::skills {

/// Per-skill sub-goal proposal distribution used by the look-ahead search
/// and by the success-model data collection. Free-space sub-goals are
/// uniform over x, y in [0.05, 0.95] and z in [0, 0.5]; the bias weights mix
/// in object-centred reach targets and task-goal-centred transfer targets.
struct SubgoalSampler {
  /// Probability that a reach sub-goal is drawn next to the object.
  double reach_object_bias = 0.5;
  /// Probability that a transfer sub-goal is drawn next to the task goal.
  double transfer_goal_bias = 0.3;
  /// Spread of the biased proposals.
  double bias_spread = 0.02;
  double lift_min = 0.1;
  double lift_max = 0.3;

  /// `observation` is a full (possibly predicted) world observation.
  env::Vec3 sample(env::TaskId skill, const Eigen::VectorXd& observation, const env::Vec3& task_goal,
                   std::mt19937_64& rng) const;
};

}  // namespace herlase::skills
