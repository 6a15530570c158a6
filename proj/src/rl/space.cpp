#include "herlase/rl/space.hpp"

namespace herlase::rl {

SpaceAdapter SpaceAdapter::full() {
  SpaceAdapter a;
  for (int i = 0; i < env::kObservationDim; ++i) a.observation_indices.push_back(i);
  a.action_dim = env::kActionDim;
  a.achieved_offset = env::kObjectPos;
  return a;
}

SpaceAdapter SpaceAdapter::gripper_only() {
  SpaceAdapter a;
  for (int i = 0; i < 6; ++i) a.observation_indices.push_back(env::kGripperPos + i);
  a.action_dim = 3;
  a.achieved_offset = 0;
  return a;
}

Vector SpaceAdapter::project(const Vector& full_observation) const {
  if (full_observation.size() != env::kObservationDim) {
    throw env::DimensionMismatch("SpaceAdapter::project: expected a full observation");
  }
  Vector out(observation_indices.size());
  for (std::size_t i = 0; i < observation_indices.size(); ++i) out[i] = full_observation[observation_indices[i]];
  return out;
}

env::Action SpaceAdapter::to_env_action(const Vector& action) const {
  if (action.size() != action_dim) throw env::DimensionMismatch("SpaceAdapter::to_env_action: bad action length");
  env::Vec4 v = env::Vec4::Zero();
  v.head(action_dim) = action;
  return env::Action(v);
}

env::Vec3 SpaceAdapter::achieved(const Vector& projected_observation) const {
  if (projected_observation.size() != observation_dim()) {
    throw env::DimensionMismatch("SpaceAdapter::achieved: bad observation length");
  }
  return projected_observation.segment<3>(achieved_offset);
}

}  // namespace herlase::rl
