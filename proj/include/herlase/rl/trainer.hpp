#pragma once

#include "herlase/env/world.hpp"
#include "herlase/rl/actor_critic.hpp"
#include "herlase/rl/space.hpp"
#include "herlase/rl/transition.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace herlase::rl {

struct TrainConfig {
  double actor_lr = 1e-3;
  double critic_lr = 1e-4;
  int batch_size = 128;
  int cycles_per_epoch = 20;
  int updates_per_cycle = 40;
  int episodes_per_epoch = 16;
  int eval_episodes = 20;
  int epochs = 50;
  double gamma = 0.98;
  double polyak = 0.95;
  double action_noise_sigma = 0.2;
  /// Weight of the squared-action penalty on the actor loss.
  double action_l2 = 0.0;
  double epsilon_start = 1.0;
  double epsilon_end = 0.001;
  /// Fraction of the epoch budget over which epsilon decays linearly.
  double epsilon_decay_fraction = 0.5;
  /// When set, epsilon is pinned to this value for every epoch.
  std::optional<double> epsilon_fixed;
  std::size_t replay_capacity = 1'000'000;
  std::vector<int> hidden{64, 64, 64};
  /// Stop once eval success reaches this value in `early_stop_patience`
  /// consecutive epochs.
  std::optional<double> early_stop_success;
  int early_stop_patience = 2;

  double epsilon(int epoch) const;
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  long episodes = 0;
  double success_rate = 0.0;
  double mean_actor_loss = 0.0;
  double mean_critic_loss = 0.0;
  double epsilon = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> rows;
  bool early_stopped = false;

  static constexpr const char* kHeader =
      "epoch,episodes,success_rate,mean_actor_loss,mean_critic_loss,epsilon,wall_clock_s";

  /// CSV text. Wall-clock times are the only non-reproducible column; pass
  /// false to blank them for run-to-run comparisons.
  std::string to_csv(bool include_wall_clock = true) const;
  void write_csv(const std::filesystem::path& path) const;
  static TrainingLog read_csv(const std::filesystem::path& path);
};

/// Mutable state handed to an explorer at every step.
struct ExplorationContext {
  const ActorCritic& policy;
  double epsilon;
  double sigma;
  std::mt19937_64& noise_rng;
  std::mt19937_64& explore_rng;
};

/// Chooses the behaviour action during data collection.
class Explorer {
 public:
  virtual ~Explorer() = default;
  virtual void begin_episode(const env::WorldState& /*state*/, const env::Vec3& /*goal*/) {}
  /// Returns an action in the trained policy's action space.
  virtual Vector act(const env::WorldState& state, const Vector& obs, const Vector& goal, ExplorationContext& ctx) = 0;
  virtual void after_step(const env::StepResult& /*result*/) {}
};

/// pi(s, g) plus Gaussian noise: plain HER exploration.
class NoisyPolicyExplorer : public Explorer {
 public:
  Vector act(const env::WorldState& state, const Vector& obs, const Vector& goal, ExplorationContext& ctx) override;
};

struct TrainResult {
  ActorCritic policy;
  TrainingLog log;
};

using EpochCallback = std::function<void(const EpochLog&, const ActorCritic&)>;

/// DDPG + HER("final") over `task`, observed through `space`. Each epoch
/// collects `episodes_per_epoch` episodes spread over the cycles, runs
/// `updates_per_cycle` updates per cycle and evaluates the frozen policy on
/// `eval_episodes` fresh episodes with no exploration noise.
TrainResult train_goal_conditioned(const env::TaskSpec& task, const SpaceAdapter& space, const TrainConfig& cfg,
                                   Explorer& explorer, std::uint64_t seed, const EpochCallback& on_epoch = {});

/// Success rate of the deterministic policy over `episodes` episodes drawn
/// from `rng`.
double evaluate_policy(const ActorCritic& policy, const env::TaskSpec& task, const SpaceAdapter& space, int episodes,
                       std::mt19937_64& rng);

/// Runs one episode with `explorer` and returns its transitions.
Episode collect_episode(const env::TaskSpec& task, const SpaceAdapter& space, std::uint64_t reset_seed,
                        Explorer& explorer, ExplorationContext& ctx, bool* success = nullptr);

/// Adapter a skill or task trains in.
SpaceAdapter space_for(env::TaskId task);

/// Skill training: HER + DDPG with noisy-policy exploration on the skill's
/// own environment.
TrainResult train_skill(env::TaskId skill, const TrainConfig& cfg, std::uint64_t seed,
                        const EpochCallback& on_epoch = {});

}  // namespace herlase::rl
