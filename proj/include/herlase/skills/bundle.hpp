#pragma once

#include "herlase/skills/models.hpp"
#include "herlase/skills/skill.hpp"

#include <filesystem>
#include <vector>

namespace herlase::skills {

/// Everything the planner needs about one skill: policy and critic, success
/// model and coarse dynamics, all trained on the same skill.
struct SkillBundle {
  Skill skill;
  SuccessModel success;
  DynamicsModel dynamics;

  env::TaskId id() const { return skill.id; }
  int max_skill_steps() const { return skill.max_skill_steps; }

  /// `dir` receives policy.ckpt, meta.json and models.ckpt.
  void save(const std::filesystem::path& dir) const;
  static SkillBundle load(const std::filesystem::path& dir);
};

/// Loads `<root>/<skill name>` for each requested skill.
std::vector<SkillBundle> load_bundles(const std::filesystem::path& root, const std::vector<env::TaskId>& skills);

}  // namespace herlase::skills
