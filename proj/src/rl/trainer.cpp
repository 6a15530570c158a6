#include "herlase/rl/trainer.hpp"

#include "herlase/rl/her.hpp"
#include "herlase/util/seed.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace herlase::rl {

double TrainConfig::epsilon(int epoch) const {
  if (epsilon_fixed) return *epsilon_fixed;
  const double horizon = std::max(1.0, epsilon_decay_fraction * static_cast<double>(epochs));
  const double frac = std::min(1.0, static_cast<double>(epoch) / horizon);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

void TrainConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("TrainConfig: ") + name + " must be positive");
  };
  positive(actor_lr, "actor_lr");
  positive(critic_lr, "critic_lr");
  positive(batch_size, "batch_size");
  positive(cycles_per_epoch, "cycles_per_epoch");
  positive(updates_per_cycle, "updates_per_cycle");
  positive(episodes_per_epoch, "episodes_per_epoch");
  positive(eval_episodes, "eval_episodes");
  positive(epochs, "epochs");
  positive(static_cast<double>(replay_capacity), "replay_capacity");
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("TrainConfig: gamma must lie in (0,1)");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw std::invalid_argument("TrainConfig: polyak must lie in [0,1]");
  if (action_noise_sigma < 0.0) throw std::invalid_argument("TrainConfig: action_noise_sigma must be >= 0");
  if (epsilon_end > epsilon_start) throw std::invalid_argument("TrainConfig: epsilon must be non-increasing");
  if (hidden.empty()) throw std::invalid_argument("TrainConfig: hidden layer list is empty");
}

std::string TrainingLog::to_csv(bool include_wall_clock) const {
  std::string out = kHeader;
  out += '\n';
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%ld,%.6f,%.9g,%.9g,%.6f,", r.epoch, r.episodes, r.success_rate,
                  r.mean_actor_loss, r.mean_critic_loss, r.epsilon);
    out += buf;
    if (include_wall_clock) {
      std::snprintf(buf, sizeof buf, "%.3f", r.wall_clock_s);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write training log '" + path.string() + "'");
  out << to_csv(true);
}

TrainingLog TrainingLog::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read training log '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  if (line != kHeader) throw std::runtime_error("unexpected training log header in '" + path.string() + "'");
  TrainingLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochLog r;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 6) throw std::runtime_error("malformed training log row in '" + path.string() + "'");
    r.epoch = std::stoi(cells[0]);
    r.episodes = std::stol(cells[1]);
    r.success_rate = std::stod(cells[2]);
    r.mean_actor_loss = std::stod(cells[3]);
    r.mean_critic_loss = std::stod(cells[4]);
    r.epsilon = std::stod(cells[5]);
    r.wall_clock_s = cells.size() > 6 && !cells[6].empty() ? std::stod(cells[6]) : 0.0;
    log.rows.push_back(r);
  }
  return log;
}

Vector NoisyPolicyExplorer::act(const env::WorldState&, const Vector& obs, const Vector& goal,
                                ExplorationContext& ctx) {
  return select_action_noisy(ctx.policy, obs, goal, ctx.sigma, ctx.noise_rng);
}

Episode collect_episode(const env::TaskSpec& task, const SpaceAdapter& space, std::uint64_t reset_seed,
                        Explorer& explorer, ExplorationContext& ctx, bool* success) {
  env::Environment environment(task);
  environment.reset(reset_seed);
  const Vector goal = environment.goal();
  explorer.begin_episode(environment.state(), environment.goal());
  Episode episode;
  episode.reserve(static_cast<std::size_t>(task.max_episode_steps()));
  Vector obs = space.project(env::observe(environment.state()));
  bool succeeded = false;
  for (;;) {
    const Vector action = explorer.act(environment.state(), obs, goal, ctx);
    const env::StepResult r = environment.step(space.to_env_action(action));
    explorer.after_step(r);
    Vector next_obs = space.project(env::observe(r.next_state));
    episode.push_back({obs, goal, action, r.reward, next_obs, r.success});
    obs = std::move(next_obs);
    if (r.done) {
      succeeded = r.success;
      break;
    }
  }
  if (success != nullptr) *success = succeeded;
  return episode;
}

double evaluate_policy(const ActorCritic& policy, const env::TaskSpec& task, const SpaceAdapter& space, int episodes,
                       std::mt19937_64& rng) {
  if (episodes <= 0) return 0.0;
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    env::Environment environment(task);
    environment.reset(rng());
    const Vector goal = environment.goal();
    for (;;) {
      const Vector obs = space.project(env::observe(environment.state()));
      const env::StepResult r = environment.step(space.to_env_action(policy.act(obs, goal)));
      if (r.done) {
        successes += r.success ? 1 : 0;
        break;
      }
    }
  }
  return static_cast<double>(successes) / episodes;
}

namespace {

void update_normalizers(ActorCritic& ac, const Episode& episode, const Episode& relabeled) {
  const auto n = static_cast<Eigen::Index>(episode.size());
  Matrix obs(n + 1, ac.obs_dim);
  Matrix goals(2 * n, ac.goal_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    obs.row(i) = episode[static_cast<std::size_t>(i)].state.transpose();
    goals.row(i) = episode[static_cast<std::size_t>(i)].goal.transpose();
    goals.row(n + i) = relabeled[static_cast<std::size_t>(i)].goal.transpose();
  }
  obs.row(n) = episode.back().next_state.transpose();
  ac.obs_norm.update(obs);
  ac.goal_norm.update(goals);
}

}  // namespace

TrainResult train_goal_conditioned(const env::TaskSpec& task, const SpaceAdapter& space, const TrainConfig& cfg,
                                   Explorer& explorer, std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  TrainResult result;
  result.policy = ActorCritic::create(space.observation_dim(), env::kGoalDim, space.action_dim, cfg.hidden, cfg.gamma,
                                      util::derive_seed(seed, "networks"));
  ActorCritic& ac = result.policy;
  Optimizers opt(ac, cfg.actor_lr, cfg.critic_lr);
  ReplayBuffer buffer(cfg.replay_capacity);

  auto env_rng = util::make_stream(seed, "env");
  auto noise_rng = util::make_stream(seed, "noise");
  auto explore_rng = util::make_stream(seed, "explore");
  auto buffer_rng = util::make_stream(seed, "buffer");
  auto eval_rng = util::make_stream(seed, "eval");

  long episodes_done = 0;
  int streak = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double eps = cfg.epsilon(epoch);
    double actor_loss_sum = 0.0;
    double critic_loss_sum = 0.0;
    long updates = 0;
    int next_episode = 0;
    for (int cycle = 0; cycle < cfg.cycles_per_epoch; ++cycle) {
      // Episode e of the epoch is collected in cycle floor(e * cycles / episodes).
      while (next_episode < cfg.episodes_per_epoch &&
             (static_cast<long>(next_episode) * cfg.cycles_per_epoch) / cfg.episodes_per_epoch == cycle) {
        ExplorationContext ctx{ac, eps, cfg.action_noise_sigma, noise_rng, explore_rng};
        Episode episode = collect_episode(task, space, env_rng(), explorer, ctx);
        Episode relabeled = her_relabel(episode, task, space);
        update_normalizers(ac, episode, relabeled);
        buffer.add(episode);
        buffer.add(relabeled);
        ++next_episode;
        ++episodes_done;
      }
      if (buffer.empty()) continue;
      for (int u = 0; u < cfg.updates_per_cycle; ++u) {
        const Batch batch = Batch::from(buffer.sample(static_cast<std::size_t>(cfg.batch_size), buffer_rng));
        const UpdateStats s = ddpg_update(ac, opt, batch, cfg.polyak, cfg.action_l2);
        actor_loss_sum += s.actor_loss;
        critic_loss_sum += s.critic_loss;
        ++updates;
      }
    }
    const auto t1 = std::chrono::steady_clock::now();

    EpochLog row;
    row.epoch = epoch;
    row.episodes = episodes_done;
    row.success_rate = evaluate_policy(ac, task, space, cfg.eval_episodes, eval_rng);
    row.mean_actor_loss = updates > 0 ? actor_loss_sum / static_cast<double>(updates) : 0.0;
    row.mean_critic_loss = updates > 0 ? critic_loss_sum / static_cast<double>(updates) : 0.0;
    row.epsilon = eps;
    row.wall_clock_s = std::chrono::duration<double>(t1 - t0).count();
    result.log.rows.push_back(row);
    if (on_epoch) on_epoch(row, ac);

    if (cfg.early_stop_success) {
      streak = row.success_rate >= *cfg.early_stop_success ? streak + 1 : 0;
      if (streak >= cfg.early_stop_patience) {
        result.log.early_stopped = epoch + 1 < cfg.epochs;
        break;
      }
    }
  }
  return result;
}

SpaceAdapter space_for(env::TaskId task) {
  return task == env::TaskId::reach ? SpaceAdapter::gripper_only() : SpaceAdapter::full();
}

TrainResult train_skill(env::TaskId skill, const TrainConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch) {
  if (skill != env::TaskId::reach && skill != env::TaskId::grasp && skill != env::TaskId::transfer) {
    throw std::invalid_argument("train_skill: '" + std::string(env::to_string(skill)) + "' is not a skill");
  }
  NoisyPolicyExplorer explorer;
  return train_goal_conditioned(env::make_task(skill), space_for(skill), cfg, explorer, seed, on_epoch);
}

}  // namespace herlase::rl
