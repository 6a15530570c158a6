#include "herlase/rl/actor_critic.hpp"
#include "herlase/rl/her.hpp"
#include "herlase/rl/trainer.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace herlase;
using rl::Matrix;
using rl::Vector;

namespace {

class RandomExplorer : public rl::Explorer {
 public:
  Vector act(const env::WorldState&, const Vector&, const Vector&, rl::ExplorationContext& ctx) override {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return Vector::NullaryExpr(ctx.policy.action_dim, [&] { return u(ctx.noise_rng); });
  }
};

rl::Episode random_episode(const env::TaskSpec& task, std::uint64_t seed) {
  const auto space = rl::space_for(task.id);
  static const rl::ActorCritic ac =
      rl::ActorCritic::create(env::kObservationDim, 3, env::kActionDim, {8}, 0.98, 1);
  static const rl::ActorCritic ac_reach = rl::ActorCritic::create(6, 3, 3, {8}, 0.98, 1);
  std::mt19937_64 noise(seed), explore(seed + 1);
  rl::ExplorationContext ctx{task.id == env::TaskId::reach ? ac_reach : ac, 0.0, 0.0, noise, explore};
  RandomExplorer ex;
  return rl::collect_episode(task, space, seed, ex, ctx);
}

rl::TrainConfig tiny_config() {
  rl::TrainConfig c;
  c.epochs = 2;
  c.cycles_per_epoch = 4;
  c.updates_per_cycle = 5;
  c.episodes_per_epoch = 4;
  c.eval_episodes = 3;
  c.batch_size = 16;
  c.hidden = {16, 16};
  return c;
}

}  // namespace

TEST_SUITE("rl") {
  TEST_CASE("space adapters") {
    const auto full = rl::SpaceAdapter::full();
    const auto grip = rl::SpaceAdapter::gripper_only();
    CHECK(full.observation_dim() == env::kObservationDim);
    CHECK(grip.observation_dim() == 6);
    env::WorldState s;
    s.gripper_pos = {0.1, 0.2, 0.3};
    s.gripper_vel = {0.01, 0.0, -0.01};
    s.object_pos = {0.9, 0.9, 0.0};
    const Vector o = env::observe(s);
    const Vector p = grip.project(o);
    CHECK(p.head(3).isApprox(s.gripper_pos));
    CHECK(grip.achieved(p) == s.gripper_pos);
    CHECK(full.achieved(o) == s.object_pos);
    const env::Action a = grip.to_env_action(Vector(Eigen::Vector3d(0.5, -0.5, 1.0)));
    CHECK(a.values[3] == 0.0);
  }

  TEST_CASE("noisy action selection") {
    const auto ac = rl::ActorCritic::create(6, 3, 3, {16}, 0.98, 4);
    const Vector o = Vector::Constant(6, 0.3);
    const Vector g = Vector::Constant(3, 0.6);
    CHECK(rl::select_action_noisy(ac, o, g, 0.0, std::uint64_t{1}) == ac.act(o, g));
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Vector a = rl::select_action_noisy(ac, o, g, 100.0, s);
      CHECK(a.cwiseAbs().maxCoeff() <= 1.0);
    }
    CHECK(rl::select_action_noisy(ac, o, g, 0.3, std::uint64_t{9}) ==
          rl::select_action_noisy(ac, o, g, 0.3, std::uint64_t{9}));
  }

  TEST_CASE("actor outputs stay inside [-1,1] for extreme inputs") {
    auto ac = rl::ActorCritic::create(env::kObservationDim, 3, 4, {64, 64, 64}, 0.98, 8);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> big(0.0, 1e3);
    for (int i = 0; i < 200; ++i) {
      const Vector o = Vector::NullaryExpr(env::kObservationDim, [&] { return big(rng); });
      const Vector g = Vector::NullaryExpr(3, [&] { return big(rng); });
      CHECK(ac.act(o, g).cwiseAbs().maxCoeff() <= 1.0);
    }
  }

  TEST_CASE("replay buffer respects capacity and evicts oldest first") {
    rl::ReplayBuffer buf(5);
    for (int i = 0; i < 12; ++i) {
      rl::Transition t;
      t.reward = i;
      buf.add(t);
      CHECK(buf.size() <= 5);
    }
    std::vector<double> rewards;
    for (std::size_t i = 0; i < buf.size(); ++i) rewards.push_back(buf.at(i).reward);
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards == std::vector<double>{7, 8, 9, 10, 11});
    CHECK_THROWS(rl::ReplayBuffer(0));
    std::mt19937_64 rng(0);
    CHECK_THROWS(rl::ReplayBuffer(3).sample(1, rng));
  }

  TEST_CASE("replay sampling is uniform (chi-square)") {
    constexpr std::size_t k = 100;
    constexpr std::size_t draws = 100000;
    rl::ReplayBuffer buf(k);
    for (std::size_t i = 0; i < 3 * k; ++i) buf.add(rl::Transition{});
    std::mt19937_64 rng(2024);
    std::vector<double> counts(k, 0.0);
    for (auto i : buf.sample_indices(draws, rng)) counts[i] += 1.0;
    const double expected = static_cast<double>(draws) / k;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // Wilson-Hilferty 0.999 quantile of chi-square with k-1 degrees of freedom.
    const double dof = k - 1.0;
    const double z = 3.090232;
    const double crit = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3.0);
    CHECK(chi2 < crit);
  }

  TEST_CASE("her relabeling matches the reward oracle") {
    for (env::TaskId id : {env::TaskId::reach, env::TaskId::grasp, env::TaskId::transfer,
                           env::TaskId::pick_and_move, env::TaskId::put_inside, env::TaskId::stack}) {
      const auto task = env::make_task(id);
      const auto space = rl::space_for(id);
      for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const rl::Episode ep = random_episode(task, seed);
        const rl::Episode re = rl::her_relabel(ep, task, space);
        REQUIRE(re.size() == ep.size());
        const Eigen::VectorXd last = ep.back().next_state;
        const env::Vec3 g_final = id == env::TaskId::reach ? env::Vec3(last.head(3)) : env::Vec3(last.segment(8, 3));
        for (std::size_t t = 0; t < ep.size(); ++t) {
          const Eigen::VectorXd& s1 = ep[t].next_state;
          const env::Vec3 ach = id == env::TaskId::reach ? env::Vec3(s1.head(3)) : env::Vec3(s1.segment(8, 3));
          CHECK(re[t].goal.isApprox(g_final));
          CHECK(re[t].reward == oracle::task_reward(ach, g_final, task));
          CHECK(re[t].done == (re[t].reward == 0.0));
          CHECK(re[t].state == ep[t].state);
          CHECK(re[t].action == ep[t].action);
        }
        CHECK(re.back().reward == 0.0);
      }
    }
    CHECK(rl::her_relabel({}, env::make_task(env::TaskId::reach), rl::SpaceAdapter::gripper_only()).empty());
  }

  TEST_CASE("relabeling an episode that ended at its goal keeps its rewards") {
    const auto task = env::make_task(env::TaskId::reach);
    const auto space = rl::space_for(task.id);
    env::Environment e(task);
    e.reset(3);
    rl::Episode ep;
    for (int t = 0; t < 50; ++t) {
      const Vector o = space.project(env::observe(e.state()));
      const env::Vec3 d = (e.goal() - e.state().gripper_pos) / e.task().params.step_scale;
      const Vector a = d.cwiseMax(-1.0).cwiseMin(1.0);
      const auto r = e.step(space.to_env_action(a));
      ep.push_back({o, Vector(e.goal()), a, r.reward, space.project(env::observe(r.next_state)), r.success});
      if (r.done) break;
    }
    REQUIRE(ep.back().reward == 0.0);
    const auto re = rl::her_relabel(ep, task, space);
    for (std::size_t t = 0; t < ep.size(); ++t) CHECK(re[t].reward == ep[t].reward);
  }

  TEST_CASE("critic targets are clipped to [-1/(1-gamma), 0]") {
    auto ac = rl::ActorCritic::create(2, 1, 1, {4}, 0.98, 1);
    ac.target_critic.weights().back().setZero();
    ac.target_critic.biases().back()[0] = -1e6;
    rl::Batch b;
    b.obs = Matrix::Zero(3, 2);
    b.goal = Matrix::Zero(3, 1);
    b.action = Matrix::Zero(3, 1);
    b.next_obs = Matrix::Zero(3, 2);
    b.reward = Vector::Constant(3, -1.0);
    b.not_done = Vector::Ones(3);
    CHECK(rl::critic_targets(ac, b).isApproxToConstant(-50.0));
    CHECK(ac.min_return() == doctest::Approx(-50.0));
    ac.target_critic.biases().back()[0] = 10.0;
    b.reward.setZero();
    CHECK(rl::critic_targets(ac, b).isZero());
    b.not_done.setZero();
    b.reward.setConstant(-1.0);
    CHECK(rl::critic_targets(ac, b).isApproxToConstant(-1.0));
  }

  TEST_CASE("zero rewards with zero critics give zero critic loss") {
    auto ac = rl::ActorCritic::create(2, 1, 1, {4}, 0.98, 1);
    for (auto* net : {&ac.critic, &ac.target_critic}) {
      for (auto& w : net->weights()) w.setZero();
    }
    rl::Optimizers opt(ac, 1e-3, 1e-3);
    rl::Batch b;
    b.obs = Matrix::Random(4, 2);
    b.goal = Matrix::Random(4, 1);
    b.action = Matrix::Random(4, 1);
    b.next_obs = Matrix::Random(4, 2);
    b.reward = Vector::Zero(4);
    b.not_done = Vector::Ones(4);
    CHECK(rl::critic_targets(ac, b).isZero());
    CHECK(rl::ddpg_update(ac, opt, b, 0.95).critic_loss == 0.0);
  }

  TEST_CASE("actor step increases a linear critic's value") {
    auto ac = rl::ActorCritic::create(3, 2, 2, {16, 16}, 0.98, 5);
    // Q = w . a: a single linear layer reading only the action inputs.
    nn::Mlp critic({3 + 2 + 2, 1}, nn::Activation::relu, nn::Activation::linear);
    critic.weights()[0](0, 5) = 0.8;
    critic.weights()[0](0, 6) = -0.3;
    ac.critic = critic;
    ac.target_critic = critic;
    rl::Optimizers opt(ac, 1e-2, 1e-12);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d(0.0, 1.0);
    rl::Batch b;
    b.obs = Matrix::NullaryExpr(32, 3, [&] { return d(rng); });
    b.goal = Matrix::NullaryExpr(32, 2, [&] { return d(rng); });
    b.action = Matrix::Zero(32, 2);
    b.next_obs = b.obs;
    b.reward = Vector::Constant(32, -1.0);
    b.not_done = Vector::Ones(32);
    const Eigen::Vector2d w(0.8, -0.3);
    auto value = [&] { return (ac.actor.forward(ac.policy_input(b.obs, b.goal)) * w).mean(); };
    const double before = value();
    for (int i = 0; i < 5; ++i) rl::ddpg_update(ac, opt, b, 0.95);
    CHECK(value() > before);
  }

  TEST_CASE("critic targets stay in range during training updates") {
    auto ac = rl::ActorCritic::create(2, 1, 1, {8}, 0.98, 3);
    rl::Optimizers opt(ac, 1e-2, 1e-2);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int it = 0; it < 50; ++it) {
      rl::Batch b;
      b.obs = Matrix::NullaryExpr(16, 2, [&] { return u(rng); });
      b.goal = Matrix::NullaryExpr(16, 1, [&] { return u(rng); });
      b.action = Matrix::NullaryExpr(16, 1, [&] { return u(rng); });
      b.next_obs = Matrix::NullaryExpr(16, 2, [&] { return u(rng); });
      b.reward = Vector::NullaryExpr(16, [&] { return u(rng) < 0.0 ? -1.0 : 0.0; });
      b.not_done = Vector::Ones(16);
      const Vector y = rl::critic_targets(ac, b);
      CHECK(y.maxCoeff() <= 0.0);
      CHECK(y.minCoeff() >= -50.0);
      rl::ddpg_update(ac, opt, b, 0.95);
    }
  }

  TEST_CASE("normalizer statistics and checkpoint round trip") {
    rl::Normalizer n(2);
    Matrix rows(4, 2);
    rows << 1, 10, 3, 10, 5, 10, 7, 10;
    n.update(rows);
    CHECK(n.mean()[0] == doctest::Approx(4.0));
    CHECK(n.std()[0] == doctest::Approx(std::sqrt(5.0)));
    CHECK(n.std()[1] == doctest::Approx(1e-2));
    const Vector z = n.normalize(Vector(Eigen::Vector2d(100.0, 10.0)));
    CHECK(z[0] == 5.0);
    CHECK(z[1] == 0.0);
    nn::Checkpoint c;
    n.save(c, "n");
    const auto m = rl::Normalizer::load(c, "n");
    CHECK(m.mean() == n.mean());
    CHECK(m.std() == n.std());
  }

  TEST_CASE("actor-critic checkpoint round trip") {
    auto ac = rl::ActorCritic::create(6, 3, 3, {16, 16}, 0.98, 12);
    ac.obs_norm.update(Vector(Vector::LinSpaced(6, 0.0, 1.0)));
    nn::Checkpoint c;
    ac.save(c, "p");
    const auto back = rl::ActorCritic::load(nn::Checkpoint::deserialize(c.serialize()), "p");
    const Vector o = Vector::Constant(6, 0.2), g = Vector::Constant(3, 0.4);
    CHECK(back.act(o, g) == ac.act(o, g));
    CHECK(back.value(o, g) == ac.value(o, g));
  }

  TEST_CASE("epsilon schedule") {
    rl::TrainConfig c;
    c.epochs = 100;
    CHECK(c.epsilon(0) == 1.0);
    CHECK(c.epsilon(25) == doctest::Approx(0.5005));
    CHECK(c.epsilon(50) == doctest::Approx(0.001));
    CHECK(c.epsilon(99) == doctest::Approx(0.001));
    c.epsilon_fixed = 0.0;
    CHECK(c.epsilon(0) == 0.0);
  }

  TEST_CASE("invalid training configs are rejected") {
    rl::TrainConfig c;
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = rl::TrainConfig{};
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    CHECK_THROWS_AS(rl::train_skill(env::TaskId::put_inside, rl::TrainConfig{}, 1), std::invalid_argument);
  }

  TEST_CASE("training log has one row per epoch and is reproducible") {
    const auto cfg = tiny_config();
    const auto a = rl::train_skill(env::TaskId::reach, cfg, 5);
    const auto b = rl::train_skill(env::TaskId::reach, cfg, 5);
    CHECK(a.log.rows.size() == 2);
    CHECK(a.log.rows.back().episodes == 8);
    CHECK(a.log.to_csv(false) == b.log.to_csv(false));
    const auto c = rl::train_skill(env::TaskId::reach, cfg, 6);
    CHECK(a.log.to_csv(false) != c.log.to_csv(false));

    const auto path = std::filesystem::temp_directory_path() / "herlase_tests_log.csv";
    a.log.write_csv(path);
    const auto back = rl::TrainingLog::read_csv(path);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1].success_rate == doctest::Approx(a.log.rows[1].success_rate));
  }

  TEST_CASE("early stopping flags the log") {
    auto cfg = tiny_config();
    cfg.epochs = 5;
    cfg.early_stop_success = 0.0;
    cfg.early_stop_patience = 2;
    const auto r = rl::train_skill(env::TaskId::reach, cfg, 1);
    CHECK(r.log.rows.size() == 2);
    CHECK(r.log.early_stopped);
  }
}
