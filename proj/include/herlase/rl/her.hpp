#pragma once

#include "herlase/env/world.hpp"
#include "herlase/rl/space.hpp"
#include "herlase/rl/transition.hpp"

namespace herlase::rl {

/// Hindsight relabeling with the "final" strategy: every transition of the
/// episode is copied with its goal replaced by the goal achieved in the last
/// state s_T, and its reward and terminal flag recomputed by the task reward.
/// The input episode is left untouched; an empty episode yields no copies.
Episode her_relabel(const Episode& episode, const env::TaskSpec& task, const SpaceAdapter& space);

}  // namespace herlase::rl
