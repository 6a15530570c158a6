#include "herlase/env/world.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace herlase;
using env::Action;
using env::TaskId;
using env::Vec3;
using env::WorldState;

namespace {

const std::vector<TaskId> kAllTasks{TaskId::reach,      TaskId::grasp, TaskId::transfer, TaskId::pick_and_move,
                                    TaskId::put_inside, TaskId::stack, TaskId::take_out, TaskId::put_inside_high_wall};

Action random_action(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return Action(u(rng), u(rng), u(rng), u(rng));
}

bool inside_box(const Vec3& p) { return (p.array() >= 0.0).all() && (p.array() <= 1.0).all(); }

}  // namespace

TEST_SUITE("env") {
  TEST_CASE("task names round trip") {
    for (TaskId id : kAllTasks) CHECK(env::task_from_string(env::to_string(id)) == id);
    CHECK_THROWS_AS(env::task_from_string("juggle"), std::invalid_argument);
  }

  TEST_CASE("reset is deterministic per seed") {
    for (TaskId id : kAllTasks) {
      const auto task = env::make_task(id);
      const auto a = env::reset(task, 1234);
      const auto b = env::reset(task, 1234);
      CHECK(a.first == b.first);
      CHECK(a.second == b.second);
      const auto c = env::reset(task, 1235);
      CHECK_FALSE((a.first == c.first && a.second == c.second));
    }
  }

  TEST_CASE("transfer and take-out start with the object held") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      CHECK(env::reset(env::make_task(TaskId::transfer), seed).first.attached);
      CHECK(env::reset(env::make_task(TaskId::take_out), seed).first.attached);
      CHECK_FALSE(env::reset(env::make_task(TaskId::pick_and_move), seed).first.attached);
    }
  }

  TEST_CASE("reset goals and positions stay inside the workspace") {
    for (TaskId id : kAllTasks) {
      const auto task = env::make_task(id);
      for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto [s, g] = env::reset(task, seed);
        CHECK(inside_box(g));
        CHECK(inside_box(s.gripper_pos));
        CHECK(inside_box(s.object_pos));
      }
    }
  }

  TEST_CASE("start states are not already successful") {
    for (TaskId id : {TaskId::pick_and_move, TaskId::put_inside, TaskId::stack, TaskId::take_out, TaskId::grasp}) {
      const auto task = env::make_task(id);
      for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto [s, g] = env::reset(task, seed);
        CHECK(env::reward(env::achieved_goal(s, task), g, task) == -1.0);
      }
    }
  }

  TEST_CASE("zero action leaves positions unchanged") {
    const auto task = env::make_task(TaskId::pick_and_move);
    const auto [s, g] = env::reset(task, 3);
    const auto r0 = env::reward(env::achieved_goal(s, task), g, task);
    const auto r = env::step(task, s, g, Action(0, 0, 0, 0), 0);
    CHECK(r.next_state.gripper_pos == s.gripper_pos);
    CHECK(r.next_state.object_pos == s.object_pos);
    CHECK(r.reward == r0);
    CHECK(r.next_state.gripper_vel.isZero());
  }

  TEST_CASE("actions are clipped and non-finite actions rejected") {
    const Action a(5.0, -3.0, 0.5, -9.0);
    CHECK(a.values == env::Vec4(1.0, -1.0, 0.5, -1.0));
    CHECK_THROWS_AS(Action(std::nan(""), 0, 0, 0), env::InvalidAction);
  }

  TEST_CASE("closing at the object attaches it and later moves carry it") {
    const auto task = env::make_task(TaskId::pick_and_move);
    WorldState s;
    s.gripper_pos = {0.5, 0.5, 0.03};
    s.object_pos = {0.5, 0.5, 0.0};
    s = env::transition(task, s, Action(0, 0, 0, -1));
    REQUIRE(s.attached);
    CHECK(s.aperture == 0.0);
    for (int i = 0; i < 5; ++i) {
      s = env::transition(task, s, Action(1.0, 0.0, 1.0, -1.0));
      CHECK(s.attached);
      CHECK((s.object_pos - s.gripper_pos).norm() <= task.params.grasp_radius);
    }
    CHECK(s.object_pos.x() == doctest::Approx(0.75));
    CHECK(s.object_pos.z() == doctest::Approx(0.28));
    // Opening drops the object to the table.
    s = env::transition(task, s, Action(0, 0, 0, 1));
    CHECK_FALSE(s.attached);
    CHECK(s.object_pos.z() == 0.0);
    CHECK(s.object_pos.x() == doctest::Approx(0.75));
  }

  TEST_CASE("closing away from the object does not attach") {
    const auto task = env::make_task(TaskId::pick_and_move);
    WorldState s;
    s.gripper_pos = {0.5, 0.5, 0.2};
    s.object_pos = {0.5, 0.5, 0.0};
    s = env::transition(task, s, Action(0, 0, 0, -1));
    CHECK_FALSE(s.attached);
  }

  TEST_CASE("released object lands on the stack base when above it") {
    const auto task = env::make_task(TaskId::stack);
    WorldState s;
    s.gripper_pos = {0.3, 0.7, 0.2};
    s.object_pos = s.gripper_pos;
    s.attached = true;
    s = env::transition(task, s, Action(0, 0, 0, 1));
    CHECK(s.object_pos.z() == doctest::Approx(task.params.stack_base_height));
    CHECK(env::reward(s.object_pos, Vec3(0.3, 0.7, 0.05), task) == 0.0);
  }

  TEST_CASE("the tall wall truncates motion") {
    const auto task = env::make_task(TaskId::put_inside_high_wall);
    WorldState s;
    s.gripper_pos = {0.58, 0.7, 0.5};
    const auto n = env::transition(task, s, Action(1, 0, 0, 0));
    CHECK(n.gripper_pos.x() < 0.6);
    CHECK(n.gripper_pos.x() > 0.6 - 1e-5);
    // The ordinary container wall can be passed above its height.
    const auto low = env::make_task(TaskId::put_inside);
    CHECK(env::transition(low, s, Action(1, 0, 0, 0)).gripper_pos.x() == doctest::Approx(0.63));
    s.gripper_pos.z() = 0.05;
    CHECK(env::transition(low, s, Action(1, 0, 0, 0)).gripper_pos.x() < 0.6);
  }

  TEST_CASE("walls are impermeable along random trajectories") {
    for (TaskId id : {TaskId::put_inside, TaskId::put_inside_high_wall, TaskId::take_out}) {
      const auto task = env::make_task(id);
      std::mt19937_64 rng(77);
      for (int ep = 0; ep < 200; ++ep) {
        auto [s, g] = env::reset(task, static_cast<std::uint64_t>(ep));
        for (int t = 0; t < 50; ++t) {
          const auto next = env::transition(task, s, random_action(rng));
          for (const auto& w : task.walls) {
            CHECK_FALSE(env::crosses_wall(w, s.gripper_pos, next.gripper_pos));
          }
          CHECK(inside_box(next.gripper_pos));
          if (next.attached) CHECK((next.object_pos - next.gripper_pos).norm() <= task.params.grasp_radius);
          s = next;
        }
      }
    }
  }

  TEST_CASE("reward boundaries") {
    const auto reach = env::make_task(TaskId::reach);
    CHECK(env::reward(Vec3(0.2, 0.2, 0.2), Vec3(0.2, 0.2, 0.2), reach) == 0.0);
    CHECK(env::reward(Vec3(0.2, 0.2, 0.2), Vec3(0.2, 0.2, 0.2 + 0.05 + 1e-9), reach) == -1.0);
    CHECK(env::reward(Vec3(0.2, 0.2, 0.2), Vec3(0.2, 0.2, 0.2 + 0.049), reach) == 0.0);
    const auto inside = env::make_task(TaskId::put_inside);
    CHECK(env::reward(Vec3(0.7, 0.7, 0.0), Vec3(0.7, 0.7, 0.0), inside) == 0.0);
    CHECK(env::reward(Vec3(0.7, 0.7, 0.05), Vec3(0.7, 0.7, 0.0), inside) == -1.0);
    CHECK(env::reward(Vec3(0.77, 0.7, 0.0), Vec3(0.7, 0.7, 0.0), inside) == 0.0);
    const Eigen::VectorXd short_goal = Eigen::VectorXd::Zero(2);
    const Eigen::VectorXd goal = Eigen::VectorXd::Zero(3);
    using Ref = Eigen::Ref<const Eigen::VectorXd>;
    CHECK_THROWS_AS(env::reward(Ref(short_goal), Ref(goal), reach), env::DimensionMismatch);
  }

  TEST_CASE("achieved goal selects gripper or object") {
    WorldState s;
    s.gripper_pos = {0.1, 0.2, 0.3};
    s.object_pos = {0.4, 0.5, 0.0};
    CHECK(env::achieved_goal(s, env::make_task(TaskId::reach)) == s.gripper_pos);
    CHECK(env::achieved_goal(s, env::make_task(TaskId::grasp)) == s.object_pos);
    CHECK(env::achieved_goal(env::observe(s), env::make_task(TaskId::grasp)) == s.object_pos);
  }

  TEST_CASE("step reward agrees with the reward oracle and episodes end by 50 steps") {
    std::mt19937_64 rng(5);
    for (TaskId id : kAllTasks) {
      const auto task = env::make_task(id);
      for (int ep = 0; ep < 40; ++ep) {
        env::Environment e(task);
        e.reset(static_cast<std::uint64_t>(ep));
        int steps = 0;
        for (;;) {
          const auto r = e.step(random_action(rng));
          ++steps;
          CHECK((r.reward == 0.0 || r.reward == -1.0));
          CHECK(r.reward == oracle::task_reward(r.achieved_goal, e.goal(), task));
          CHECK(r.reward == env::reward(env::achieved_goal(r.next_state, task), e.goal(), task));
          if (r.done) break;
        }
        CHECK(steps <= 50);
      }
    }
  }

  TEST_CASE("observation layout") {
    WorldState s;
    s.gripper_pos = {0.1, 0.2, 0.3};
    s.object_pos = {0.5, 0.5, 0.0};
    s.attached = true;
    s.aperture = 0.25;
    const auto o = env::observe(s);
    REQUIRE(o.size() == env::kObservationDim);
    CHECK(o[env::kAttached] == 1.0);
    CHECK(o[env::kAperture] == 0.25);
    CHECK(o.segment<3>(env::kRelative).isApprox(Vec3(0.4, 0.3, -0.3)));
  }
}
