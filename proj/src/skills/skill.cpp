#include "herlase/skills/skill.hpp"

#include "herlase/rl/trainer.hpp"

#include <json.hpp>

#include <fstream>

namespace herlase::skills {

Vector Skill::action(const Vector& observation, const Vector& subgoal) const {
  return policy.act(space.project(observation), subgoal);
}

env::Action Skill::env_action(const Vector& observation, const Vector& subgoal) const {
  return space.to_env_action(action(observation, subgoal));
}

double Skill::q_value(const Vector& observation, const Vector& subgoal) const {
  return policy.value(space.project(observation), subgoal);
}

bool Skill::achieved(const Vector& observation, const Vector& subgoal) const {
  return env::reward(env::achieved_goal(observation, task), env::Vec3(subgoal), task) == 0.0;
}

void Skill::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nn::Checkpoint ckpt;
  policy.save(ckpt, "policy");
  nn::save_checkpoint(dir / "policy.ckpt", ckpt);
  nlohmann::json meta{{"task", env::to_string(id)},
                      {"state_dim", policy.obs_dim},
                      {"goal_dim", policy.goal_dim},
                      {"action_dim", policy.action_dim},
                      {"tolerance", task.tolerance},
                      {"max_skill_steps", max_skill_steps}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

Skill Skill::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json");
  if (!in) throw std::runtime_error("missing skill metadata in '" + dir.string() + "'");
  const auto meta = nlohmann::json::parse(in);
  Skill s = make_skill(env::task_from_string(meta.at("task").get<std::string>()),
                       rl::ActorCritic::load(nn::load_checkpoint(dir / "policy.ckpt"), "policy"));
  s.max_skill_steps = meta.value("max_skill_steps", kDefaultMaxSkillSteps);
  if (s.policy.obs_dim != s.space.observation_dim() || s.policy.action_dim != s.space.action_dim) {
    throw std::runtime_error("skill '" + s.name() + "' checkpoint does not match its space");
  }
  return s;
}

Skill make_skill(env::TaskId id, rl::ActorCritic policy, const env::WorldParams& params) {
  Skill s;
  s.id = id;
  s.policy = std::move(policy);
  s.space = rl::space_for(id);
  s.task = env::make_task(id, params);
  return s;
}

SkillRollout execute_skill(const Skill& skill, const env::TaskSpec& world, const env::WorldState& start,
                           const env::Vec3& subgoal) {
  SkillRollout r;
  r.final_state = start;
  const Vector g = subgoal;
  Vector obs = env::observe(start);
  r.success = skill.achieved(obs, g);
  while (!r.success && r.steps < skill.max_skill_steps) {
    r.final_state = env::transition(world, r.final_state, skill.env_action(obs, g));
    obs = env::observe(r.final_state);
    ++r.steps;
    r.success = skill.achieved(obs, g);
  }
  return r;
}

}  // namespace herlase::skills
