#pragma once

#include "herlase/lookahead/tree_search.hpp"
#include "herlase/rl/trainer.hpp"

#include <optional>
#include <vector>

namespace herlase::lookahead {

struct SkillExecutionState {
  std::size_t skill = 0;
  env::Vec3 subgoal = env::Vec3::Zero();
  int steps_in_skill = 0;
  int max_skill_steps = skills::kDefaultMaxSkillSteps;
  bool terminated = false;
};

/// True once the active skill reached its sub-goal, used up its step budget,
/// or the task goal is achieved. `observation` is the full observation after
/// the step.
bool check_skill_termination(const SkillExecutionState& exec, const Vector& observation, const SkillBundle& bundle,
                             const env::TaskSpec& task, const env::Vec3& task_goal);

/// What the explorer did at one primitive step.
struct ExplorationEvent {
  enum class Kind { noisy_policy, plan, skill_step, search_failed };
  long episode = 0;
  int step = 0;
  Kind kind = Kind::noisy_policy;
  std::size_t skill = 0;
  env::Vec3 subgoal = env::Vec3::Zero();
  /// Set on the step at which the active skill terminated.
  bool terminated = false;
};

/// Look-ahead exploration: at each decision point (no active skill) draw
/// from explore_rng; with probability epsilon plan with tree_search and hand
/// control to the chosen skill until it terminates, otherwise act with the
/// noisy current policy.
class LookaheadExplorer : public rl::Explorer {
 public:
  LookaheadExplorer(const env::TaskSpec& task, const rl::SpaceAdapter& space, const std::vector<SkillBundle>& skills,
                    SearchConfig cfg);

  void begin_episode(const env::WorldState& state, const env::Vec3& goal) override;
  Vector act(const env::WorldState& state, const Vector& obs, const Vector& goal, rl::ExplorationContext& ctx) override;
  void after_step(const env::StepResult& result) override;

  /// Keeps a per-step event log (for inspection and tests).
  void record_events(bool on) { record_ = on; }
  const std::vector<ExplorationEvent>& events() const { return events_; }
  long searches() const { return searches_; }

 private:
  env::TaskSpec task_;
  rl::SpaceAdapter space_;
  const std::vector<SkillBundle>& skills_;
  SearchConfig cfg_;
  env::Vec3 goal_ = env::Vec3::Zero();
  std::optional<SkillExecutionState> active_;
  long episode_ = -1;
  int step_ = 0;
  bool record_ = false;
  long searches_ = 0;
  std::vector<ExplorationEvent> events_;
};

/// DDPG + HER on `task` with look-ahead exploration over `skills`.
rl::TrainResult herlase_train(const env::TaskSpec& task, const std::vector<SkillBundle>& skills,
                              const rl::TrainConfig& cfg, const SearchConfig& search, std::uint64_t seed,
                              const rl::EpochCallback& on_epoch = {});

}  // namespace herlase::lookahead
