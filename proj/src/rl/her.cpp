#include "herlase/rl/her.hpp"

namespace herlase::rl {

Episode her_relabel(const Episode& episode, const env::TaskSpec& task, const SpaceAdapter& space) {
  if (episode.empty()) return {};
  const Vector final_goal = space.achieved(episode.back().next_state);
  Episode out;
  out.reserve(episode.size());
  for (const auto& t : episode) {
    Transition r = t;
    r.goal = final_goal;
    r.reward = env::reward(space.achieved(t.next_state), env::Vec3(final_goal), task);
    r.done = r.reward == 0.0;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace herlase::rl
