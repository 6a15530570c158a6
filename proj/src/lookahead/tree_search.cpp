#include "herlase/lookahead/tree_search.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace herlase::lookahead {

void SearchConfig::validate() const {
  if (branching_factor < 1) throw std::invalid_argument("SearchConfig: branching factor must be >= 1");
  if (max_height < 1) throw std::invalid_argument("SearchConfig: max height must be >= 1");
  if (!(prune_threshold >= 0.0 && prune_threshold <= 1.0)) {
    throw std::invalid_argument("SearchConfig: prune threshold must lie in [0,1]");
  }
}

std::vector<Candidate> sample_candidates(const std::vector<SkillBundle>& skills, int branching_factor,
                                         const skills::SubgoalSampler& sampler, const Vector& observation,
                                         const env::Vec3& task_goal, std::mt19937_64& rng) {
  if (skills.empty()) throw std::invalid_argument("sample_candidates: empty skill set");
  if (branching_factor < 1) throw std::invalid_argument("sample_candidates: branching factor must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, skills.size() - 1);
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(branching_factor));
  for (int b = 0; b < branching_factor; ++b) {
    Candidate c;
    c.skill = pick(rng);
    c.subgoal = sampler.sample(skills[c.skill].id(), observation, task_goal, rng);
    out.push_back(c);
  }
  return out;
}

std::vector<Candidate> sample_candidates(const std::vector<SkillBundle>& skills, int branching_factor,
                                         const skills::SubgoalSampler& sampler, const Vector& observation,
                                         const env::Vec3& task_goal, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_candidates(skills, branching_factor, sampler, observation, task_goal, rng);
}

double score_path(const std::vector<double>& edge_q, const Vector& leaf_state, const env::Vec3& goal,
                  const env::TaskSpec& task) {
  double r = 0.0;
  for (double q : edge_q) r += q;
  return r - (env::achieved_goal(leaf_state, task) - goal).norm();
}

std::vector<Candidate> SearchTrace::candidates_of(int id) const {
  std::vector<Candidate> out;
  for (const auto& n : nodes) {
    if (n.parent == id) out.push_back({n.skill, n.subgoal});
  }
  return out;
}

std::string SearchTrace::to_csv(const std::vector<SkillBundle>& skills) const {
  std::string out = "node,parent,depth,skill_id,subgoal_x,subgoal_y,subgoal_z,u,edge_q,pruned,leaf,score\n";
  char buf[512];
  for (const auto& n : nodes) {
    const std::string name = n.parent < 0 ? "root" : skills.at(n.skill).skill.name();
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%d,", n.id, n.parent, n.depth, name.c_str(),
                  n.subgoal.x(), n.subgoal.y(), n.subgoal.z(), n.u, n.edge_q, n.pruned ? 1 : 0, n.leaf ? 1 : 0);
    out += buf;
    if (n.leaf) {
      std::snprintf(buf, sizeof buf, "%.6f", n.score);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void SearchTrace::write_csv(const std::filesystem::path& path, const std::vector<SkillBundle>& skills) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write search trace '" + path.string() + "'");
  out << to_csv(skills);
}

std::optional<Candidate> SearchResult::first() const {
  if (!best || best->steps.empty()) return std::nullopt;
  return best->steps.front();
}

namespace {

bool goal_reached(const Vector& state, const env::Vec3& goal, const env::TaskSpec& task) {
  return env::reward(env::achieved_goal(state, task), goal, task) == 0.0;
}

PathResult path_to(const SearchTrace& trace, int leaf, const env::Vec3& goal, const env::TaskSpec& task) {
  PathResult p;
  std::vector<double> qs;
  for (int id = leaf; id > 0; id = trace.nodes[static_cast<std::size_t>(id)].parent) {
    const auto& n = trace.nodes[static_cast<std::size_t>(id)];
    p.steps.insert(p.steps.begin(), Candidate{n.skill, n.subgoal});
    qs.insert(qs.begin(), n.edge_q);
  }
  const Vector& s = trace.nodes[static_cast<std::size_t>(leaf)].state;
  p.r_final = -(env::achieved_goal(s, task) - goal).norm();
  p.total_score = score_path(qs, s, goal, task);
  return p;
}

}  // namespace

SearchResult tree_search(const Vector& observation, const env::Vec3& goal, const env::TaskSpec& task,
                         const std::vector<SkillBundle>& skills, const SearchConfig& cfg, std::mt19937_64& rng) {
  if (skills.empty()) throw std::invalid_argument("tree_search: empty skill set");
  cfg.validate();
  SearchResult result;
  auto& nodes = result.trace.nodes;
  TraceNode root;
  root.state = observation;
  nodes.push_back(root);

  std::deque<int> open{0};
  std::vector<int> leaves;
  while (!open.empty()) {
    const int id = open.front();
    open.pop_front();
    const Vector state = nodes[static_cast<std::size_t>(id)].state;
    const int depth = nodes[static_cast<std::size_t>(id)].depth;
    const auto cands = sample_candidates(skills, cfg.branching_factor, cfg.sampler, state, goal, rng);
    bool any_child = false;
    for (const Candidate& c : cands) {
      const SkillBundle& b = skills[c.skill];
      TraceNode n;
      n.id = static_cast<int>(nodes.size());
      n.parent = id;
      n.depth = depth + 1;
      n.skill = c.skill;
      n.subgoal = c.subgoal;
      n.u = b.success.predict(state, c.subgoal);
      n.pruned = !(n.u > cfg.prune_threshold);
      if (!n.pruned) {
        n.edge_q = b.skill.q_value(state, c.subgoal);
        n.state = b.dynamics.predict(state, c.subgoal);
        any_child = true;
        if (n.depth >= cfg.max_height || goal_reached(n.state, goal, task)) {
          n.leaf = true;
          leaves.push_back(n.id);
        } else {
          open.push_back(n.id);
        }
      }
      nodes.push_back(std::move(n));
    }
    // A non-root node whose candidates were all pruned ends its branch.
    if (!any_child && id != 0) {
      nodes[static_cast<std::size_t>(id)].leaf = true;
      leaves.push_back(id);
    }
  }

  double best = -std::numeric_limits<double>::infinity();
  for (int leaf : leaves) {
    PathResult p = path_to(result.trace, leaf, goal, task);
    nodes[static_cast<std::size_t>(leaf)].score = p.total_score;
    // Strict comparison keeps the earliest-created leaf on ties.
    if (p.total_score > best) {
      best = p.total_score;
      result.best = std::move(p);
    }
  }
  return result;
}

}  // namespace herlase::lookahead
