#pragma once

#include "herlase/baselines/baselines.hpp"
#include "herlase/lookahead/herlase.hpp"
#include "herlase/rl/trainer.hpp"
#include "herlase/skills/models.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace herlase::harness {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Method { herlase, her, pas };
enum class SkillSet { k1, k2, k3 };

std::string to_string(Method m);
std::string to_string(SkillSet k);
Method method_from_string(const std::string& name);
SkillSet skill_set_from_string(const std::string& name);
/// K1 = {reach, grasp, transfer}, K2 = {grasp, transfer}, K3 = {reach, transfer}.
std::vector<env::TaskId> skills_in(SkillSet k);

struct ModelFitConfig {
  skills::CollectConfig collect;
  skills::RegressionConfig dynamics = skills::RegressionConfig::dynamics_defaults();
  skills::RegressionConfig success = skills::RegressionConfig::success_defaults();
};

/// One experiment: a task, an exploration method, a skill set and the
/// hyper-parameters of every stage. Stored as JSON; every key is optional
/// and unknown keys are rejected.
struct ExperimentConfig {
  env::TaskId task = env::TaskId::put_inside;
  Method method = Method::herlase;
  SkillSet skill_set = SkillSet::k1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int epochs = 150;
  std::filesystem::path output_dir = "runs";
  /// Where skill bundles live; defaults to <output_dir>/skills.
  std::optional<std::filesystem::path> skills_dir;
  /// Seed of the skill artifacts used for task training.
  std::uint64_t skill_seed = 1;
  rl::TrainConfig train;
  rl::TrainConfig skill_train;
  lookahead::SearchConfig search;
  ModelFitConfig models;
  baselines::PasConfig pas;

  static ExperimentConfig defaults();
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// FNV-1a over the canonical JSON of everything that affects results
  /// (seeds and output locations excluded).
  std::string hash() const;
  /// Hash of the skill-training section only.
  std::string skill_hash() const;
  /// Hash of skill training plus model fitting.
  std::string model_hash() const;

  std::filesystem::path skills_root() const;
  std::filesystem::path skill_dir(env::TaskId skill, std::uint64_t seed) const;
  /// Directory of one task run, e.g. runs/put_inside/herlase_k1_b5_h3/seed_1.
  std::filesystem::path run_dir(std::uint64_t seed) const;
  std::string run_label() const;
  void validate() const;
};

struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string task;
  std::string method;
  std::string skill_set;
  int branching_factor = 0;
  int max_height = 0;
  std::vector<double> success;
  double wall_clock_per_episode_s = 0.0;
  bool early_stopped = false;
  std::map<std::string, std::string> artifacts;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
  static RunRecord load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct SkillSummary {
  env::TaskId skill = env::TaskId::reach;
  std::uint64_t seed = 0;
  double final_success = 0.0;
  int epochs_run = 0;
  bool reused = false;
};

struct ModelSummary {
  env::TaskId skill = env::TaskId::reach;
  std::size_t rows = 0;
  double success_fraction = 0.0;
  skills::FitReport dynamics;
  skills::FitReport success;
  /// Collection plus fitting time of the run that produced the models.
  double seconds = 0.0;
  bool reused = false;
};

/// Trains every skill of the configured set for each seed in `seeds` and
/// stores policy checkpoints, metadata and training logs. Artifacts whose
/// stored hash matches are reused unless `force`.
std::vector<SkillSummary> cmd_train_skills(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                           std::ostream& out, bool force = false);

/// Collects rollouts of the `skill_seed` skills and fits their success and
/// dynamics models, completing each skill directory into a bundle.
std::vector<ModelSummary> cmd_fit_models(const ExperimentConfig& cfg, std::ostream& out, bool force = false);

/// Loads the bundles of the configured skill set, failing with
/// MissingArtifact when any is absent or stale.
std::vector<skills::SkillBundle> load_skill_set(const ExperimentConfig& cfg);

/// One task-training run per seed; writes log.csv, policy.ckpt and
/// record.json under run_dir(seed). Matching records are reused unless
/// `force`.
std::vector<RunRecord> cmd_train_task(const ExperimentConfig& cfg, std::ostream& out, bool force = false);

struct ReportOptions {
  std::vector<double> thresholds{0.5, 0.8};
};

struct Report {
  /// task,method,skill_set,branching,height,epoch,median_success,seeds
  std::string curves_csv;
  /// task,method,skill_set,branching,height,threshold,median_epoch
  std::string thresholds_csv;
  /// task,method,skill_set,branching,height,median_wall_clock_per_episode_s
  std::string wall_clock_csv;
  std::string summary;
};

/// Aggregates records over seeds. Throws when a group mixes config hashes
/// or no records are given.
Report cmd_report(const std::vector<RunRecord>& records, const ReportOptions& opt = {});
/// Every record.json below `root`, in path order.
std::vector<RunRecord> find_records(const std::filesystem::path& root);

/// Median with the mean of the middle pair for even sizes.
double median(std::vector<double> values);
/// First epoch whose success reaches `threshold`, if any.
std::optional<int> epochs_to_threshold(const std::vector<double>& success, double threshold);
/// Median over seeds of the per-seed epoch counts; seeds that never reach
/// the threshold count as infinity. Empty when the median is infinite.
std::optional<double> median_epochs_to_threshold(const std::vector<std::vector<double>>& runs, double threshold);
/// Per-epoch median over seeds (curves truncated to the shortest run).
std::vector<double> median_curve(const std::vector<std::vector<double>>& runs);

}  // namespace herlase::harness
