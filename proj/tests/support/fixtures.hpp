#pragma once

#include "herlase/rl/trainer.hpp"
#include "herlase/skills/bundle.hpp"

#include <cmath>

namespace fixture {

using namespace herlase;

/// Skill with a freshly initialised (untrained) policy.
inline skills::Skill untrained_skill(env::TaskId id, std::uint64_t seed = 1) {
  const auto space = rl::space_for(id);
  auto ac = rl::ActorCritic::create(space.observation_dim(), env::kGoalDim, space.action_dim, {16, 16}, 0.98, seed);
  return skills::make_skill(id, std::move(ac));
}

/// Success model that outputs `u` everywhere.
inline skills::SuccessModel constant_success(double u) {
  skills::SuccessModel m;
  m.net = nn::Mlp({env::kObservationDim + env::kGoalDim, 4, 1}, nn::Activation::relu, nn::Activation::sigmoid);
  for (auto& w : m.net.weights()) w.setZero();
  for (auto& b : m.net.biases()) b.setZero();
  m.net.biases().back()[0] = std::log(u / (1.0 - u));
  m.input.mean = rl::Vector::Zero(env::kObservationDim + env::kGoalDim);
  m.input.scale = rl::Vector::Ones(env::kObservationDim + env::kGoalDim);
  return m;
}

/// Dynamics model that predicts the start state unchanged.
inline skills::DynamicsModel identity_dynamics() {
  skills::DynamicsModel m;
  const int in = env::kObservationDim + env::kGoalDim;
  m.net = nn::Mlp({in, env::kObservationDim}, nn::Activation::relu, nn::Activation::linear);
  m.net.weights()[0].setZero();
  m.net.biases()[0].setZero();
  for (int i = 0; i < env::kObservationDim; ++i) m.net.weights()[0](i, i) = 1.0;
  m.input.mean = rl::Vector::Zero(in);
  m.input.scale = rl::Vector::Ones(in);
  m.output.mean = rl::Vector::Zero(env::kObservationDim);
  m.output.scale = rl::Vector::Ones(env::kObservationDim);
  return m;
}

/// Dynamics model that moves the gripper to the sub-goal and keeps the rest.
inline skills::DynamicsModel teleport_dynamics() {
  auto m = identity_dynamics();
  for (int i = 0; i < 3; ++i) {
    m.net.weights()[0](env::kGripperPos + i, env::kGripperPos + i) = 0.0;
    m.net.weights()[0](env::kGripperPos + i, env::kObservationDim + i) = 1.0;
  }
  return m;
}

inline skills::SkillBundle bundle(env::TaskId id, double u, bool teleport = false, std::uint64_t seed = 1) {
  return {untrained_skill(id, seed), constant_success(u), teleport ? teleport_dynamics() : identity_dynamics()};
}

}  // namespace fixture
