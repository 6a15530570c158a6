#include "herlase/lookahead/herlase.hpp"

#include "herlase/util/seed.hpp"

#include <stdexcept>

namespace herlase::lookahead {

bool check_skill_termination(const SkillExecutionState& exec, const Vector& observation, const SkillBundle& bundle,
                             const env::TaskSpec& task, const env::Vec3& task_goal) {
  if (exec.steps_in_skill >= exec.max_skill_steps) return true;
  if (bundle.skill.achieved(observation, exec.subgoal)) return true;
  return env::reward(env::achieved_goal(observation, task), task_goal, task) == 0.0;
}

LookaheadExplorer::LookaheadExplorer(const env::TaskSpec& task, const rl::SpaceAdapter& space,
                                     const std::vector<SkillBundle>& skills, SearchConfig cfg)
    : task_(task), space_(space), skills_(skills), cfg_(std::move(cfg)) {
  if (skills_.empty()) throw std::invalid_argument("LookaheadExplorer: empty skill set");
  cfg_.validate();
}

void LookaheadExplorer::begin_episode(const env::WorldState&, const env::Vec3& goal) {
  goal_ = goal;
  active_.reset();
  ++episode_;
  step_ = 0;
}

Vector LookaheadExplorer::act(const env::WorldState& state, const Vector& obs, const Vector& goal,
                              rl::ExplorationContext& ctx) {
  ExplorationEvent ev;
  ev.episode = episode_;
  ev.step = step_;
  const Vector full = env::observe(state);
  if (!active_) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(ctx.explore_rng) < ctx.epsilon) {
      std::mt19937_64 search_rng(ctx.explore_rng());
      ++searches_;
      const SearchResult r = tree_search(full, goal_, task_, skills_, cfg_, search_rng);
      if (const auto c = r.first()) {
        active_ = SkillExecutionState{c->skill, c->subgoal, 0, skills_[c->skill].max_skill_steps(), false};
        ev.kind = ExplorationEvent::Kind::plan;
      } else {
        ev.kind = ExplorationEvent::Kind::search_failed;
      }
    }
  } else {
    ev.kind = ExplorationEvent::Kind::skill_step;
  }

  Vector action;
  if (active_) {
    ev.skill = active_->skill;
    ev.subgoal = active_->subgoal;
    const env::Action a = skills_[active_->skill].skill.env_action(full, active_->subgoal);
    action = a.values.head(space_.action_dim);
  } else {
    action = rl::select_action_noisy(ctx.policy, obs, goal, ctx.sigma, ctx.noise_rng);
  }
  if (record_) events_.push_back(ev);
  return action;
}

void LookaheadExplorer::after_step(const env::StepResult& result) {
  ++step_;
  if (!active_) return;
  ++active_->steps_in_skill;
  const Vector obs = env::observe(result.next_state);
  if (check_skill_termination(*active_, obs, skills_[active_->skill], task_, goal_)) {
    active_.reset();
    if (record_ && !events_.empty()) events_.back().terminated = true;
  }
}

rl::TrainResult herlase_train(const env::TaskSpec& task, const std::vector<SkillBundle>& skills,
                              const rl::TrainConfig& cfg, const SearchConfig& search, std::uint64_t seed,
                              const rl::EpochCallback& on_epoch) {
  const rl::SpaceAdapter space = rl::space_for(task.id);
  LookaheadExplorer explorer(task, space, skills, search);
  return rl::train_goal_conditioned(task, space, cfg, explorer, seed, on_epoch);
}

}  // namespace herlase::lookahead
