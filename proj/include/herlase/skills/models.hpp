#pragma once

#include "herlase/env/world.hpp"
#include "herlase/nn/checkpoint.hpp"
#include "herlase/nn/mlp.hpp"
#include "herlase/skills/skill.hpp"
#include "herlase/skills/subgoal_sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace herlase::skills {

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SkillDatasetRow {
  Vector start_state;
  Vector goal;
  Vector final_state;
  bool success = false;
  /// Start drawn from the pick-and-move distribution rather than the
  /// skill's own environment.
  bool task_start = false;
};

/// Rollouts of one skill: full-observation start state, sub-goal, full
/// observation after the skill terminated, and whether it reached the
/// sub-goal.
struct SkillDataset {
  env::TaskId skill = env::TaskId::reach;
  std::vector<SkillDatasetRow> rows;

  std::size_t size() const { return rows.size(); }
  double success_fraction() const;
  /// Rows started in the skill's own environment.
  SkillDataset skill_env_rows() const;

  void write_csv(const std::filesystem::path& path) const;
  static SkillDataset read_csv(const std::filesystem::path& path, env::TaskId skill);
};

struct CollectConfig {
  int episodes = 5000;
  /// Share of rows whose start state comes from the pick-and-move start
  /// distribution (sub-goal from the sampler); the rest come from the
  /// skill's own environment.
  double task_start_fraction = 0.5;
  SubgoalSampler sampler;
};

/// Rolls the trained skill out `episodes` times in its own (wall-free)
/// environment.
SkillDataset collect_skill_data(const Skill& skill, const CollectConfig& cfg, std::uint64_t seed);

/// Per-dimension affine standardization with the statistics of a data set.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const nn::Matrix& rows, double min_scale = 1e-3);
  nn::Matrix normalize(const nn::Matrix& rows) const;
  nn::Matrix denormalize(const nn::Matrix& rows) const;
  Vector normalize(const Vector& row) const;
  Vector denormalize(const Vector& row) const;

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static Standardizer load(const nn::Checkpoint& ckpt, const std::string& prefix);
};

struct RegressionConfig {
  std::vector<int> hidden;
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 100;
  double holdout_fraction = 0.1;
  std::size_t min_rows = 2000;

  static RegressionConfig dynamics_defaults();
  static RegressionConfig success_defaults();
};

struct FitReport {
  std::size_t train_rows = 0;
  std::size_t heldout_rows = 0;
  double final_train_loss = 0.0;
  /// Dynamics: mean Euclidean error of the predicted gripper and object
  /// positions on held-out rows. Success: held-out accuracy at 0.5.
  double heldout_metric = 0.0;
  bool degenerate_labels = false;
};

/// T_coarse: (s, g) -> s_final on full observations.
struct DynamicsModel {
  nn::Mlp net;
  Standardizer input;
  Standardizer output;

  Vector predict(const Vector& state, const Vector& goal) const;
  nn::Matrix predict(const nn::Matrix& states, const nn::Matrix& goals) const;

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static DynamicsModel load(const nn::Checkpoint& ckpt, const std::string& prefix);
};

/// u: (s, g) -> probability that the skill reaches g from s.
struct SuccessModel {
  nn::Mlp net;
  Standardizer input;

  double predict(const Vector& state, const Vector& goal) const;
  Vector predict(const nn::Matrix& states, const nn::Matrix& goals) const;

  void save(nn::Checkpoint& ckpt, const std::string& prefix) const;
  static SuccessModel load(const nn::Checkpoint& ckpt, const std::string& prefix);
};

/// Fits on the skill-environment rows only; task-start rows feed the
/// success model.
DynamicsModel train_dynamics(const SkillDataset& ds, const RegressionConfig& cfg, std::uint64_t seed,
                             FitReport* report = nullptr);
SuccessModel train_success(const SkillDataset& ds, const RegressionConfig& cfg, std::uint64_t seed,
                           FitReport* report = nullptr);

Vector predict_successor(const DynamicsModel& m, const Vector& state, const Vector& goal);
double predict_success(const SuccessModel& m, const Vector& state, const Vector& goal);

/// Mean Euclidean error over the gripper and object position blocks.
double position_error(const Vector& predicted, const Vector& actual);

/// Clips gripper/object positions to the workspace box, flags to [0,1], and
/// recomputes the relative-position block.
void make_consistent(Vector& observation);

}  // namespace herlase::skills
