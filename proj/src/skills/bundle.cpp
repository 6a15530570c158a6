#include "herlase/skills/bundle.hpp"

namespace herlase::skills {

void SkillBundle::save(const std::filesystem::path& dir) const {
  skill.save(dir);
  nn::Checkpoint ckpt;
  success.save(ckpt, "success");
  dynamics.save(ckpt, "dynamics");
  nn::save_checkpoint(dir / "models.ckpt", ckpt);
}

SkillBundle SkillBundle::load(const std::filesystem::path& dir) {
  SkillBundle b;
  b.skill = Skill::load(dir);
  const nn::Checkpoint ckpt = nn::load_checkpoint(dir / "models.ckpt");
  b.success = SuccessModel::load(ckpt, "success");
  b.dynamics = DynamicsModel::load(ckpt, "dynamics");
  if (b.skill.max_skill_steps <= 0) throw nn::CorruptCheckpoint("bundle '" + dir.string() + "': max_skill_steps <= 0");
  return b;
}

std::vector<SkillBundle> load_bundles(const std::filesystem::path& root, const std::vector<env::TaskId>& skills) {
  std::vector<SkillBundle> out;
  out.reserve(skills.size());
  for (env::TaskId id : skills) out.push_back(SkillBundle::load(root / std::string(env::to_string(id))));
  return out;
}

}  // namespace herlase::skills
