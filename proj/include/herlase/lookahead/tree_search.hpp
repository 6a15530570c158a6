#pragma once

#include "herlase/env/world.hpp"
#include "herlase/skills/bundle.hpp"
#include "herlase/skills/subgoal_sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace herlase::lookahead {

using skills::SkillBundle;
using Vector = Eigen::VectorXd;

struct SearchConfig {
  int branching_factor = 5;
  int max_height = 3;
  double prune_threshold = 0.5;
  skills::SubgoalSampler sampler;

  void validate() const;
};

/// One sampled (skill, sub-goal) pair. `skill` indexes the bundle list.
struct Candidate {
  std::size_t skill = 0;
  env::Vec3 subgoal = env::Vec3::Zero();
};

/// Draws B candidates: skill uniformly with replacement, then a sub-goal for
/// that skill from `sampler` given the (predicted) observation.
std::vector<Candidate> sample_candidates(const std::vector<SkillBundle>& skills, int branching_factor,
                                         const skills::SubgoalSampler& sampler, const Vector& observation,
                                         const env::Vec3& task_goal, std::mt19937_64& rng);
std::vector<Candidate> sample_candidates(const std::vector<SkillBundle>& skills, int branching_factor,
                                         const skills::SubgoalSampler& sampler, const Vector& observation,
                                         const env::Vec3& task_goal, std::uint64_t seed);

/// Sum of the edge Q-values minus the distance between the achieved-goal
/// part of the leaf state and the task goal.
double score_path(const std::vector<double>& edge_q, const Vector& leaf_state, const env::Vec3& goal,
                  const env::TaskSpec& task);

struct TraceNode {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::size_t skill = 0;
  env::Vec3 subgoal = env::Vec3::Zero();
  double u = 1.0;
  double edge_q = 0.0;
  bool pruned = false;
  bool leaf = false;
  double score = 0.0;
  Vector state;
};

/// Every node the search created, root first (id 0), in creation order.
/// Pruned candidates are kept with pruned = true and no successors.
struct SearchTrace {
  std::vector<TraceNode> nodes;

  /// Candidate set drawn when node `id` was expanded, in draw order.
  std::vector<Candidate> candidates_of(int id) const;
  std::string to_csv(const std::vector<SkillBundle>& skills) const;
  void write_csv(const std::filesystem::path& path, const std::vector<SkillBundle>& skills) const;
};

struct PathResult {
  std::vector<Candidate> steps;
  double total_score = 0.0;
  double r_final = 0.0;
};

struct SearchResult {
  /// Empty when every root candidate was pruned.
  std::optional<PathResult> best;
  SearchTrace trace;

  std::optional<Candidate> first() const;
};

/// Breadth-first look-ahead over learned skill models: nodes shallower than
/// max_height are expanded with B sampled candidates, candidates whose
/// success probability is at or below the threshold are pruned, surviving
/// children are placed at the predicted successor state and scored with the
/// skill critic. Nodes at max_height, nodes whose predicted state already
/// achieves the goal, and interior nodes with no surviving children are
/// leaves. Returns the argmax-R path.
SearchResult tree_search(const Vector& observation, const env::Vec3& goal, const env::TaskSpec& task,
                         const std::vector<SkillBundle>& skills, const SearchConfig& cfg, std::mt19937_64& rng);

}  // namespace herlase::lookahead
