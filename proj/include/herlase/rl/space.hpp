#pragma once

#include "herlase/env/world.hpp"

#include <Eigen/Dense>

#include <vector>

namespace herlase::rl {

using Vector = Eigen::VectorXd;

/// Maps between the full world observation/action spaces and the abstracted
/// space a policy is trained in. Skills that ignore the object or do not
/// control the gripper see a projection of the observation, and their
/// actions are padded with a zero grip command.
struct SpaceAdapter {
  std::vector<int> observation_indices;
  int action_dim = env::kActionDim;
  /// Offset of the 3-vector achieved goal inside the projected observation.
  int achieved_offset = env::kObjectPos;

  static SpaceAdapter full();
  static SpaceAdapter gripper_only();

  int observation_dim() const { return static_cast<int>(observation_indices.size()); }
  Vector project(const Vector& full_observation) const;
  env::Action to_env_action(const Vector& action) const;
  env::Vec3 achieved(const Vector& projected_observation) const;
};

}  // namespace herlase::rl
