#include "herlase/baselines/baselines.hpp"

#include "herlase/nn/adam.hpp"
#include "herlase/util/seed.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace herlase::baselines {

rl::TrainResult her_baseline_train(const env::TaskSpec& task, const rl::TrainConfig& cfg, std::uint64_t seed,
                                   const rl::EpochCallback& on_epoch) {
  rl::TrainConfig c = cfg;
  c.epsilon_fixed = 0.0;
  rl::NoisyPolicyExplorer explorer;
  return rl::train_goal_conditioned(task, rl::space_for(task.id), c, explorer, seed, on_epoch);
}

PasAction::PasAction(Vector v, int skills) : values(std::move(v)), skill_count(skills) {
  if (skills < 1) throw std::invalid_argument("PasAction: at least one skill required");
  if (values.size() != dimension(skills)) throw nn::InvalidInput("PasAction: dimension mismatch");
}

int PasAction::skill() const {
  Eigen::Index k = 0;
  logits().maxCoeff(&k);
  return static_cast<int>(k);
}

env::Vec3 PasAction::subgoal(int k) const {
  if (k < 0 || k >= skill_count) throw std::out_of_range("PasAction::subgoal: skill index out of range");
  const Vector raw = values.segment(skill_count + 3 * k, 3);
  return (0.5 * (raw.array().max(-1.0).min(1.0) + 1.0)).matrix();
}

Vector pas_critic_action(const PasAction& a) {
  Vector c = Vector::Zero(a.skill_count + 3);
  const int k = a.skill();
  c[k] = 1.0;
  c.tail(3) = a.values.segment(a.skill_count + 3 * k, 3);
  return c;
}

PasAgent PasAgent::create(int obs_dim, int goal_dim, int skills, const std::vector<int>& hidden, double gamma,
                          double min_return, std::uint64_t seed) {
  PasAgent a;
  a.skill_count = skills;
  a.obs_norm = rl::Normalizer(obs_dim);
  a.goal_norm = rl::Normalizer(goal_dim);
  a.gamma = gamma;
  a.min_return = min_return;
  std::vector<int> actor_sizes{obs_dim + goal_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(PasAction::dimension(skills));
  std::vector<int> critic_sizes{obs_dim + goal_dim + skills + 3};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);
  a.actor = nn::Mlp(actor_sizes, nn::Activation::relu, nn::Activation::tanh, seed);
  a.critic = nn::Mlp(critic_sizes, nn::Activation::relu, nn::Activation::linear, seed + 1);
  a.target_actor = a.actor;
  a.target_critic = a.critic;
  return a;
}

PasAction PasAgent::act(const Vector& obs, const Vector& goal) const {
  Vector in(obs.size() + goal.size());
  in << obs_norm.normalize(obs), goal_norm.normalize(goal);
  return PasAction(actor.forward(in), skill_count);
}

MacroTransition execute_macro(const env::TaskSpec& task, const std::vector<skills::SkillBundle>& skills,
                              const env::WorldState& start, const env::Vec3& goal, const PasAction& action,
                              int& episode_step, env::WorldState& end_state, bool& episode_done) {
  const int k = action.skill();
  const skills::Skill& skill = skills.at(static_cast<std::size_t>(k)).skill;
  const Vector subgoal = action.subgoal(k);
  MacroTransition m;
  m.state = env::observe(start);
  m.goal = goal;
  m.action = action;
  env::WorldState s = start;
  episode_done = false;
  for (;;) {
    const Vector obs = env::observe(s);
    const env::StepResult r = env::step(task, s, goal, skill.env_action(obs, subgoal), episode_step);
    ++episode_step;
    ++m.primitive_steps;
    m.reward += r.reward;
    s = r.next_state;
    if (r.done) {
      episode_done = true;
      m.done = r.success;
      break;
    }
    if (m.primitive_steps >= skill.max_skill_steps || skill.achieved(env::observe(s), subgoal)) break;
  }
  m.next_state = env::observe(s);
  end_state = s;
  return m;
}

namespace {

struct MacroBatch {
  Matrix obs, goal, critic_action, next_obs;
  Vector reward, not_done;
};

Matrix policy_input(const PasAgent& a, const Matrix& obs, const Matrix& goal) {
  Matrix in(obs.rows(), obs.cols() + goal.cols());
  in << a.obs_norm.normalize(obs), a.goal_norm.normalize(goal);
  return in;
}

Matrix critic_actions(const Matrix& raw, int skills) {
  Matrix out(raw.rows(), skills + 3);
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    out.row(i) = pas_critic_action(PasAction(raw.row(i).transpose(), skills)).transpose();
  }
  return out;
}

struct PasOptimizers {
  nn::AdamState actor;
  nn::AdamState critic;
};

rl::UpdateStats pas_update(PasAgent& a, PasOptimizers& opt, const MacroBatch& b, double polyak, double action_l2) {
  const auto n = static_cast<double>(b.obs.rows());
  const int skills = a.skill_count;

  const Matrix next_in = policy_input(a, b.next_obs, b.goal);
  Matrix tgt_in(next_in.rows(), next_in.cols() + skills + 3);
  tgt_in << next_in, critic_actions(a.target_actor.forward(next_in), skills);
  const Vector next_q = a.target_critic.forward(tgt_in).col(0);
  const Vector y = (b.reward.array() + a.gamma * b.not_done.array() * next_q.array()).max(a.min_return).min(0.0);

  const Matrix pol_in = policy_input(a, b.obs, b.goal);
  Matrix c_in(pol_in.rows(), pol_in.cols() + skills + 3);
  c_in << pol_in, b.critic_action;
  nn::ForwardCache c_cache;
  const Vector q = a.critic.forward(c_in, c_cache).col(0);
  const Vector td = q - y;
  rl::UpdateStats stats;
  stats.critic_loss = td.squaredNorm() / n;
  if (!std::isfinite(stats.critic_loss)) throw nn::TrainingDivergence("pas_update: non-finite critic loss");
  const nn::MlpGradients critic_grads = a.critic.backward(c_cache, Matrix((2.0 / n) * td));

  nn::ForwardCache a_cache;
  const Matrix pi = a.actor.forward(pol_in, a_cache);
  Matrix pi_in(pol_in.rows(), pol_in.cols() + skills + 3);
  pi_in << pol_in, critic_actions(pi, skills);
  nn::ForwardCache pi_cache;
  stats.actor_loss = -a.critic.forward(pi_in, pi_cache).mean();
  const nn::MlpGradients through =
      a.critic.backward(pi_cache, Matrix::Constant(pi_in.rows(), 1, -1.0 / n));
  const Matrix d_c = through.input.rightCols(skills + 3);
  Matrix d_pi = Matrix::Zero(pi.rows(), pi.cols());
  for (Eigen::Index i = 0; i < pi.rows(); ++i) {
    Eigen::Index k = 0;
    pi.row(i).head(skills).maxCoeff(&k);
    d_pi.row(i).head(skills) = d_c.row(i).head(skills);
    d_pi.block(i, skills + 3 * k, 1, 3) = d_c.block(i, skills, 1, 3);
  }
  if (action_l2 > 0.0) d_pi += (2.0 * action_l2 / static_cast<double>(pi.size())) * pi;
  const nn::MlpGradients actor_grads = a.actor.backward(a_cache, d_pi);

  nn::adam_step(a.critic, critic_grads, opt.critic);
  nn::adam_step(a.actor, actor_grads, opt.actor);
  nn::polyak_update(a.target_critic, a.critic, polyak);
  nn::polyak_update(a.target_actor, a.actor, polyak);
  return stats;
}

double evaluate_pas(const PasAgent& a, const env::TaskSpec& task, const std::vector<skills::SkillBundle>& skills,
                    int episodes, std::mt19937_64& rng) {
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    auto [s, goal] = env::reset(task, rng());
    int step = 0;
    bool done = false;
    while (!done) {
      const MacroTransition m = execute_macro(task, skills, s, goal, a.act(env::observe(s), goal), step, s, done);
      if (m.done) ++successes;
    }
  }
  return episodes > 0 ? static_cast<double>(successes) / episodes : 0.0;
}

}  // namespace

PasResult pas_train(const env::TaskSpec& task, const std::vector<skills::SkillBundle>& skills,
                    const rl::TrainConfig& cfg, const PasConfig& pas, std::uint64_t seed,
                    const std::function<void(const rl::EpochLog&)>& on_epoch) {
  if (skills.empty()) throw std::invalid_argument("pas_train: empty skill set");
  cfg.validate();
  const int n_skills = static_cast<int>(skills.size());
  int max_steps = 1;
  for (const auto& b : skills) max_steps = std::max(max_steps, b.max_skill_steps());
  PasResult result;
  PasAgent& agent = result.agent;
  agent = PasAgent::create(env::kObservationDim, env::kGoalDim, n_skills, cfg.hidden, cfg.gamma,
                           -static_cast<double>(max_steps) / (1.0 - cfg.gamma), util::derive_seed(seed, "networks"));
  PasOptimizers opt{nn::AdamState(agent.actor, cfg.actor_lr), nn::AdamState(agent.critic, cfg.critic_lr)};

  std::vector<MacroTransition> buffer;
  std::size_t next_slot = 0;
  auto env_rng = util::make_stream(seed, "env");
  auto noise_rng = util::make_stream(seed, "noise");
  auto explore_rng = util::make_stream(seed, "explore");
  auto buffer_rng = util::make_stream(seed, "buffer");
  auto eval_rng = util::make_stream(seed, "eval");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, cfg.action_noise_sigma);
  const int dim = PasAction::dimension(n_skills);

  long episodes_done = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    long updates = 0;
    double actor_loss_sum = 0.0;
    double critic_loss_sum = 0.0;
    int next_episode = 0;
    for (int cycle = 0; cycle < cfg.cycles_per_epoch; ++cycle) {
      while (next_episode < cfg.episodes_per_epoch &&
             (static_cast<long>(next_episode) * cfg.cycles_per_epoch) / cfg.episodes_per_epoch == cycle) {
        auto [s, goal] = env::reset(task, env_rng());
        int step = 0;
        bool done = false;
        std::vector<Vector> seen;
        while (!done) {
          const Vector obs = env::observe(s);
          seen.push_back(obs);
          Vector raw;
          if (unit(explore_rng) < pas.random_action_prob) {
            raw = Vector::NullaryExpr(dim, [&] { return 2.0 * unit(explore_rng) - 1.0; });
          } else {
            raw = agent.act(obs, goal).values;
            for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] += noise(noise_rng);
            raw = raw.cwiseMax(-1.0).cwiseMin(1.0);
          }
          MacroTransition m = execute_macro(task, skills, s, goal, PasAction(raw, n_skills), step, s, done);
          if (buffer.size() < cfg.replay_capacity) {
            buffer.push_back(std::move(m));
          } else {
            buffer[next_slot] = std::move(m);
            next_slot = (next_slot + 1) % cfg.replay_capacity;
          }
        }
        seen.push_back(env::observe(s));
        Matrix o(static_cast<Eigen::Index>(seen.size()), env::kObservationDim);
        for (std::size_t i = 0; i < seen.size(); ++i) o.row(static_cast<Eigen::Index>(i)) = seen[i].transpose();
        agent.obs_norm.update(o);
        agent.goal_norm.update(Vector(goal));
        ++next_episode;
        ++episodes_done;
      }
      if (buffer.empty()) continue;
      std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
      for (int u = 0; u < cfg.updates_per_cycle; ++u) {
        const auto bs = static_cast<Eigen::Index>(cfg.batch_size);
        MacroBatch b{Matrix(bs, env::kObservationDim), Matrix(bs, env::kGoalDim), Matrix(bs, n_skills + 3),
                     Matrix(bs, env::kObservationDim), Vector(bs), Vector(bs)};
        for (Eigen::Index i = 0; i < bs; ++i) {
          const MacroTransition& t = buffer[pick(buffer_rng)];
          b.obs.row(i) = t.state.transpose();
          b.goal.row(i) = t.goal.transpose();
          b.critic_action.row(i) = pas_critic_action(t.action).transpose();
          b.next_obs.row(i) = t.next_state.transpose();
          b.reward[i] = t.reward;
          b.not_done[i] = t.done ? 0.0 : 1.0;
        }
        const rl::UpdateStats st = pas_update(agent, opt, b, cfg.polyak, cfg.action_l2);
        actor_loss_sum += st.actor_loss;
        critic_loss_sum += st.critic_loss;
        ++updates;
      }
    }
    const auto t1 = std::chrono::steady_clock::now();
    rl::EpochLog row;
    row.epoch = epoch;
    row.episodes = episodes_done;
    row.success_rate = evaluate_pas(agent, task, skills, cfg.eval_episodes, eval_rng);
    row.mean_actor_loss = updates > 0 ? actor_loss_sum / static_cast<double>(updates) : 0.0;
    row.mean_critic_loss = updates > 0 ? critic_loss_sum / static_cast<double>(updates) : 0.0;
    row.epsilon = pas.random_action_prob;
    row.wall_clock_s = std::chrono::duration<double>(t1 - t0).count();
    result.log.rows.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  return result;
}

}  // namespace herlase::baselines
