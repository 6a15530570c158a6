#include "herlase/rl/actor_critic.hpp"

#include <cmath>
#include <sstream>

namespace herlase::rl {

Normalizer::Normalizer(int dim, double eps, double clip)
    : eps_(eps),
      clip_(clip),
      sum_(Vector::Zero(dim)),
      sumsq_(Vector::Zero(dim)),
      mean_(Vector::Zero(dim)),
      std_(Vector::Ones(dim)) {}

void Normalizer::update(const Matrix& rows) {
  if (rows.cols() != dim()) throw nn::InvalidInput("Normalizer::update: dimension mismatch");
  sum_ += rows.colwise().sum().transpose();
  sumsq_ += rows.array().square().matrix().colwise().sum().transpose();
  count_ += static_cast<double>(rows.rows());
  recompute();
}

void Normalizer::update(const Vector& row) {
  Matrix m = row.transpose();
  update(m);
}

void Normalizer::recompute() {
  if (count_ <= 0.0) return;
  mean_ = sum_ / count_;
  const Vector var = (sumsq_ / count_ - mean_.cwiseProduct(mean_)).cwiseMax(eps_ * eps_);
  std_ = var.cwiseSqrt();
}

Matrix Normalizer::normalize(const Matrix& rows) const {
  if (rows.cols() != dim()) throw nn::InvalidInput("Normalizer::normalize: dimension mismatch");
  Matrix out = rows;
  out.rowwise() -= mean_.transpose();
  out.array().rowwise() /= std_.transpose().array();
  return out.cwiseMax(-clip_).cwiseMin(clip_);
}

Vector Normalizer::normalize(const Vector& row) const {
  Matrix m = row.transpose();
  return normalize(m).row(0).transpose();
}

void Normalizer::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put(prefix + "/config", {3}, {eps_, clip_, count_});
  ckpt.put_vector(prefix + "/sum", sum_);
  ckpt.put_vector(prefix + "/sumsq", sumsq_);
}

Normalizer Normalizer::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  const auto& cfg = ckpt.get(prefix + "/config").payload;
  if (cfg.size() != 3) throw nn::CorruptCheckpoint("malformed normalizer block '" + prefix + "'");
  Vector sum = ckpt.get_vector(prefix + "/sum");
  Normalizer n(static_cast<int>(sum.size()), cfg[0], cfg[1]);
  n.count_ = cfg[2];
  n.sum_ = std::move(sum);
  n.sumsq_ = ckpt.get_vector(prefix + "/sumsq");
  if (n.sumsq_.size() != n.sum_.size()) throw nn::CorruptCheckpoint("normalizer size mismatch '" + prefix + "'");
  n.recompute();
  return n;
}

ActorCritic ActorCritic::create(int obs_dim, int goal_dim, int action_dim, const std::vector<int>& hidden,
                                double gamma, std::uint64_t seed) {
  ActorCritic ac;
  ac.obs_dim = obs_dim;
  ac.goal_dim = goal_dim;
  ac.action_dim = action_dim;
  ac.gamma = gamma;
  ac.obs_norm = Normalizer(obs_dim);
  ac.goal_norm = Normalizer(goal_dim);

  std::vector<int> actor_sizes{obs_dim + goal_dim};
  actor_sizes.insert(actor_sizes.end(), hidden.begin(), hidden.end());
  actor_sizes.push_back(action_dim);
  std::vector<int> critic_sizes{obs_dim + goal_dim + action_dim};
  critic_sizes.insert(critic_sizes.end(), hidden.begin(), hidden.end());
  critic_sizes.push_back(1);

  ac.actor = nn::Mlp(actor_sizes, nn::Activation::relu, nn::Activation::tanh, seed);
  ac.critic = nn::Mlp(critic_sizes, nn::Activation::relu, nn::Activation::linear, seed + 1);
  ac.target_actor = ac.actor;
  ac.target_critic = ac.critic;
  return ac;
}

Matrix ActorCritic::policy_input(const Matrix& obs, const Matrix& goal) const {
  Matrix in(obs.rows(), obs_dim + goal_dim);
  in.leftCols(obs_dim) = obs_norm.normalize(obs);
  in.rightCols(goal_dim) = goal_norm.normalize(goal);
  return in;
}

Vector ActorCritic::act(const Vector& obs, const Vector& goal) const {
  if (obs.size() != obs_dim || goal.size() != goal_dim) throw nn::InvalidInput("ActorCritic::act: dimension mismatch");
  Matrix in(1, obs_dim + goal_dim);
  in.leftCols(obs_dim) = obs_norm.normalize(obs).transpose();
  in.rightCols(goal_dim) = goal_norm.normalize(goal).transpose();
  return actor.forward(in).row(0).transpose();
}

double ActorCritic::q_value(const Vector& obs, const Vector& goal, const Vector& action) const {
  if (obs.size() != obs_dim || goal.size() != goal_dim || action.size() != action_dim) {
    throw nn::InvalidInput("ActorCritic::q_value: dimension mismatch");
  }
  Matrix in(1, obs_dim + goal_dim + action_dim);
  in.block(0, 0, 1, obs_dim) = obs_norm.normalize(obs).transpose();
  in.block(0, obs_dim, 1, goal_dim) = goal_norm.normalize(goal).transpose();
  in.block(0, obs_dim + goal_dim, 1, action_dim) = action.transpose();
  return critic.forward(in)(0, 0);
}

double ActorCritic::value(const Vector& obs, const Vector& goal) const { return q_value(obs, goal, act(obs, goal)); }

void ActorCritic::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put(prefix + "/dims", {4},
           {static_cast<double>(obs_dim), static_cast<double>(goal_dim), static_cast<double>(action_dim), gamma});
  obs_norm.save(ckpt, prefix + "/obs_norm");
  goal_norm.save(ckpt, prefix + "/goal_norm");
  ckpt.put_mlp(prefix + "/actor", actor);
  ckpt.put_mlp(prefix + "/critic", critic);
  ckpt.put_mlp(prefix + "/target_actor", target_actor);
  ckpt.put_mlp(prefix + "/target_critic", target_critic);
}

ActorCritic ActorCritic::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  const auto& dims = ckpt.get(prefix + "/dims").payload;
  if (dims.size() != 4) throw nn::CorruptCheckpoint("malformed actor-critic dims '" + prefix + "'");
  ActorCritic ac;
  ac.obs_dim = static_cast<int>(dims[0]);
  ac.goal_dim = static_cast<int>(dims[1]);
  ac.action_dim = static_cast<int>(dims[2]);
  ac.gamma = dims[3];
  ac.obs_norm = Normalizer::load(ckpt, prefix + "/obs_norm");
  ac.goal_norm = Normalizer::load(ckpt, prefix + "/goal_norm");
  ac.actor = ckpt.get_mlp(prefix + "/actor");
  ac.critic = ckpt.get_mlp(prefix + "/critic");
  ac.target_actor = ckpt.get_mlp(prefix + "/target_actor");
  ac.target_critic = ckpt.get_mlp(prefix + "/target_critic");
  if (ac.actor.input_size() != ac.obs_dim + ac.goal_dim || ac.actor.output_size() != ac.action_dim ||
      ac.critic.input_size() != ac.obs_dim + ac.goal_dim + ac.action_dim) {
    throw nn::CorruptCheckpoint("actor-critic network shapes disagree with stored dims '" + prefix + "'");
  }
  return ac;
}

Optimizers::Optimizers(const ActorCritic& ac, double actor_lr, double critic_lr)
    : actor(ac.actor, actor_lr), critic(ac.critic, critic_lr) {}

Batch Batch::from(const std::vector<const Transition*>& items) {
  if (items.empty()) throw nn::InvalidInput("Batch::from: empty batch");
  const auto n = static_cast<Eigen::Index>(items.size());
  const auto& f = *items.front();
  Batch b;
  b.obs.resize(n, f.state.size());
  b.goal.resize(n, f.goal.size());
  b.action.resize(n, f.action.size());
  b.next_obs.resize(n, f.next_state.size());
  b.reward.resize(n);
  b.not_done.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = *items[static_cast<std::size_t>(i)];
    b.obs.row(i) = t.state.transpose();
    b.goal.row(i) = t.goal.transpose();
    b.action.row(i) = t.action.transpose();
    b.next_obs.row(i) = t.next_state.transpose();
    b.reward[i] = t.reward;
    b.not_done[i] = t.done ? 0.0 : 1.0;
  }
  return b;
}

Vector critic_targets(const ActorCritic& ac, const Batch& batch) {
  const Matrix next_in = ac.policy_input(batch.next_obs, batch.goal);
  const Matrix next_action = ac.target_actor.forward(next_in);
  Matrix critic_in(next_in.rows(), next_in.cols() + ac.action_dim);
  critic_in << next_in, next_action;
  const Vector next_q = ac.target_critic.forward(critic_in).col(0);
  Vector y = batch.reward.array() + ac.gamma * batch.not_done.array() * next_q.array();
  return y.cwiseMax(ac.min_return()).cwiseMin(0.0);
}

namespace {

std::string divergence_report(const char* what, const Batch& batch, const Vector& q, const Vector& y) {
  std::ostringstream os;
  os << "ddpg_update: non-finite " << what << "; batch=" << batch.obs.rows()
     << " obs_finite=" << batch.obs.allFinite() << " goal_finite=" << batch.goal.allFinite()
     << " action_finite=" << batch.action.allFinite() << " q_range=[" << q.minCoeff() << ", " << q.maxCoeff()
     << "] y_range=[" << y.minCoeff() << ", " << y.maxCoeff() << "]";
  return os.str();
}

}  // namespace

UpdateStats ddpg_update(ActorCritic& ac, Optimizers& opt, const Batch& batch, double polyak, double action_l2) {
  const auto n = static_cast<double>(batch.obs.rows());
  const Vector y = critic_targets(ac, batch);
  const Matrix pol_in = ac.policy_input(batch.obs, batch.goal);

  Matrix critic_in(pol_in.rows(), pol_in.cols() + ac.action_dim);
  critic_in << pol_in, batch.action;
  nn::ForwardCache critic_cache;
  const Vector q = ac.critic.forward(critic_in, critic_cache).col(0);
  const Vector td = q - y;
  UpdateStats stats;
  stats.critic_loss = td.squaredNorm() / n;
  if (!std::isfinite(stats.critic_loss)) throw nn::TrainingDivergence(divergence_report("critic loss", batch, q, y));
  const Matrix dq = (2.0 / n) * td;
  const nn::MlpGradients critic_grads = ac.critic.backward(critic_cache, dq);

  nn::ForwardCache actor_cache;
  const Matrix pi = ac.actor.forward(pol_in, actor_cache);
  Matrix critic_pi_in(pol_in.rows(), pol_in.cols() + ac.action_dim);
  critic_pi_in << pol_in, pi;
  nn::ForwardCache critic_pi_cache;
  const Vector q_pi = ac.critic.forward(critic_pi_in, critic_pi_cache).col(0);
  stats.actor_loss = -q_pi.mean();
  if (!std::isfinite(stats.actor_loss)) throw nn::TrainingDivergence(divergence_report("actor loss", batch, q_pi, y));
  const Matrix dq_pi = Matrix::Constant(q_pi.size(), 1, -1.0 / n);
  const nn::MlpGradients through_critic = ac.critic.backward(critic_pi_cache, dq_pi);
  Matrix d_action = through_critic.input.rightCols(ac.action_dim);
  if (action_l2 > 0.0) {
    const double per_entry = static_cast<double>(pi.size());
    stats.actor_loss += action_l2 * pi.squaredNorm() / per_entry;
    d_action += (2.0 * action_l2 / per_entry) * pi;
  }
  const nn::MlpGradients actor_grads = ac.actor.backward(actor_cache, d_action);

  nn::adam_step(ac.critic, critic_grads, opt.critic);
  nn::adam_step(ac.actor, actor_grads, opt.actor);
  nn::polyak_update(ac.target_critic, ac.critic, polyak);
  nn::polyak_update(ac.target_actor, ac.actor, polyak);
  return stats;
}

Vector select_action_noisy(const ActorCritic& ac, const Vector& obs, const Vector& goal, double sigma,
                           std::mt19937_64& rng) {
  Vector a = ac.act(obs, goal);
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] += noise(rng);
  }
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

Vector select_action_noisy(const ActorCritic& ac, const Vector& obs, const Vector& goal, double sigma,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return select_action_noisy(ac, obs, goal, sigma, rng);
}

}  // namespace herlase::rl
