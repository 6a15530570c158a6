#pragma once

#include "herlase/nn/adam.hpp"
#include "herlase/nn/checkpoint.hpp"
#include "herlase/nn/mlp.hpp"
#include "herlase/rl/transition.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace herlase::rl {

using nn::Matrix;

/// Running mean/std estimate used to standardize network inputs.
class Normalizer {
 public:
  Normalizer() = default;
  Normalizer(int dim, double eps = 1e-2, double clip = 5.0);

  void update(const Matrix& rows);
  void update(const Vector& row);
  Matrix normalize(const Matrix& rows) const;
  Vector normalize(const Vector& row) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Vector& std() const { return std_; }

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static Normalizer load(const nn::Checkpoint& ckpt, const std::string& prefix);

 private:
  void recompute();

  double eps_ = 1e-2;
  double clip_ = 5.0;
  double count_ = 0.0;
  Vector sum_, sumsq_, mean_, std_;
};

/// Goal-conditioned deterministic actor pi(s, g) in [-1,1]^|a| and critic
/// Q(s, g, a), with target copies and input normalizers.
struct ActorCritic {
  int obs_dim = 0;
  int goal_dim = 0;
  int action_dim = 0;
  double gamma = 0.98;
  Normalizer obs_norm;
  Normalizer goal_norm;
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Mlp target_actor;
  nn::Mlp target_critic;

  static ActorCritic create(int obs_dim, int goal_dim, int action_dim, const std::vector<int>& hidden, double gamma,
                            std::uint64_t seed);

  Vector act(const Vector& obs, const Vector& goal) const;
  double q_value(const Vector& obs, const Vector& goal, const Vector& action) const;
  /// Q(s, g, pi(s, g)).
  double value(const Vector& obs, const Vector& goal) const;

  /// Normalized [obs | goal] rows.
  Matrix policy_input(const Matrix& obs, const Matrix& goal) const;

  /// Lower end of the admissible return range, -1/(1-gamma).
  double min_return() const { return -1.0 / (1.0 - gamma); }

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static ActorCritic load(const nn::Checkpoint& ckpt, const std::string& prefix);
};

struct Optimizers {
  nn::AdamState actor;
  nn::AdamState critic;

  Optimizers() = default;
  Optimizers(const ActorCritic& ac, double actor_lr, double critic_lr);
};

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

/// Stacked batch of transitions.
struct Batch {
  Matrix obs, goal, action, next_obs;
  Vector reward;
  Vector not_done;

  static Batch from(const std::vector<const Transition*>& items);
};

/// TD targets r + gamma * (1 - done) * Q'(s', g, pi'(s', g)), clipped to
/// [-1/(1-gamma), 0].
Vector critic_targets(const ActorCritic& ac, const Batch& batch);

/// One critic + actor step followed by polyak averaging of both targets.
/// The actor minimizes -mean Q(s, g, pi(s, g)) + action_l2 * mean(pi^2).
/// Throws nn::TrainingDivergence with a diagnostic if a loss is non-finite.
UpdateStats ddpg_update(ActorCritic& ac, Optimizers& opt, const Batch& batch, double polyak,
                        double action_l2 = 0.0);

/// clip(pi(s, g) + N(0, sigma^2 I), -1, 1)
Vector select_action_noisy(const ActorCritic& ac, const Vector& obs, const Vector& goal, double sigma,
                           std::mt19937_64& rng);
Vector select_action_noisy(const ActorCritic& ac, const Vector& obs, const Vector& goal, double sigma,
                           std::uint64_t seed);

}  // namespace herlase::rl
