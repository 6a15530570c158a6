#include "herlase/skills/subgoal_sampler.hpp"

#include <algorithm>

namespace herlase::skills {

namespace {

env::Vec3 free_space_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> xy(0.05, 0.95);
  std::uniform_real_distribution<double> z(0.0, 0.5);
  const double x = xy(rng);
  const double y = xy(rng);
  return {x, y, z(rng)};
}

env::Vec3 clip(const env::Vec3& p) { return p.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace

env::Vec3 SubgoalSampler::sample(env::TaskId skill, const Eigen::VectorXd& observation, const env::Vec3& task_goal,
                                 std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, bias_spread);
  const env::Vec3 object = observation.segment<3>(env::kObjectPos);
  switch (skill) {
    case env::TaskId::reach: {
      if (unit(rng) < reach_object_bias) {
        const double dx = jitter(rng);
        const double dy = jitter(rng);
        return clip(object + env::Vec3{dx, dy, std::abs(jitter(rng))});
      }
      return free_space_point(rng);
    }
    case env::TaskId::grasp: {
      const double lift = std::uniform_real_distribution<double>(lift_min, lift_max)(rng);
      return clip({object.x(), object.y(), lift});
    }
    case env::TaskId::transfer: {
      if (unit(rng) < transfer_goal_bias) {
        const double dx = jitter(rng);
        const double dy = jitter(rng);
        const double dz = jitter(rng);
        return clip(task_goal + env::Vec3{dx, dy, dz});
      }
      return free_space_point(rng);
    }
    default: return free_space_point(rng);
  }
}

}  // namespace herlase::skills
