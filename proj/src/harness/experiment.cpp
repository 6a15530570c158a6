#include "herlase/harness/experiment.hpp"

#include "herlase/skills/bundle.hpp"
#include "herlase/util/seed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace herlase::harness {

using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::herlase: return "herlase";
    case Method::her: return "her";
    case Method::pas: return "pas";
  }
  return "?";
}

std::string to_string(SkillSet k) {
  switch (k) {
    case SkillSet::k1: return "k1";
    case SkillSet::k2: return "k2";
    case SkillSet::k3: return "k3";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "herlase") return Method::herlase;
  if (name == "her") return Method::her;
  if (name == "pas") return Method::pas;
  throw ConfigError("unknown method '" + name + "' (expected herlase, her or pas)");
}

SkillSet skill_set_from_string(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (n == "k1") return SkillSet::k1;
  if (n == "k2") return SkillSet::k2;
  if (n == "k3") return SkillSet::k3;
  throw ConfigError("unknown skill set '" + name + "' (expected k1, k2 or k3)");
}

std::vector<env::TaskId> skills_in(SkillSet k) {
  using env::TaskId;
  switch (k) {
    case SkillSet::k1: return {TaskId::reach, TaskId::grasp, TaskId::transfer};
    case SkillSet::k2: return {TaskId::grasp, TaskId::transfer};
    case SkillSet::k3: return {TaskId::reach, TaskId::transfer};
  }
  return {};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

json train_to_json(const rl::TrainConfig& c) {
  json j{{"actor_lr", c.actor_lr},
         {"critic_lr", c.critic_lr},
         {"batch_size", c.batch_size},
         {"cycles_per_epoch", c.cycles_per_epoch},
         {"updates_per_cycle", c.updates_per_cycle},
         {"episodes_per_epoch", c.episodes_per_epoch},
         {"eval_episodes", c.eval_episodes},
         {"epochs", c.epochs},
         {"gamma", c.gamma},
         {"polyak", c.polyak},
         {"action_noise_sigma", c.action_noise_sigma},
         {"action_l2", c.action_l2},
         {"epsilon_start", c.epsilon_start},
         {"epsilon_end", c.epsilon_end},
         {"epsilon_decay_fraction", c.epsilon_decay_fraction},
         {"replay_capacity", c.replay_capacity},
         {"hidden", c.hidden},
         {"early_stop_patience", c.early_stop_patience}};
  j["epsilon_fixed"] = c.epsilon_fixed ? json(*c.epsilon_fixed) : json(nullptr);
  j["early_stop_success"] = c.early_stop_success ? json(*c.early_stop_success) : json(nullptr);
  return j;
}

void train_from_json(const json& j, rl::TrainConfig& c, const std::string& where) {
  reject_unknown(j,
                 {"actor_lr", "critic_lr", "batch_size", "cycles_per_epoch", "updates_per_cycle", "episodes_per_epoch",
                  "eval_episodes", "epochs", "gamma", "polyak", "action_noise_sigma", "action_l2", "epsilon_start",
                  "epsilon_end", "epsilon_decay_fraction", "epsilon_fixed", "replay_capacity", "hidden",
                  "early_stop_success", "early_stop_patience"},
                 where);
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  read(j, "batch_size", c.batch_size);
  read(j, "cycles_per_epoch", c.cycles_per_epoch);
  read(j, "updates_per_cycle", c.updates_per_cycle);
  read(j, "episodes_per_epoch", c.episodes_per_epoch);
  read(j, "eval_episodes", c.eval_episodes);
  read(j, "epochs", c.epochs);
  read(j, "gamma", c.gamma);
  read(j, "polyak", c.polyak);
  read(j, "action_noise_sigma", c.action_noise_sigma);
  read(j, "action_l2", c.action_l2);
  read(j, "epsilon_start", c.epsilon_start);
  read(j, "epsilon_end", c.epsilon_end);
  read(j, "epsilon_decay_fraction", c.epsilon_decay_fraction);
  read(j, "replay_capacity", c.replay_capacity);
  read(j, "hidden", c.hidden);
  read(j, "early_stop_patience", c.early_stop_patience);
  if (j.contains("epsilon_fixed")) {
    c.epsilon_fixed = j["epsilon_fixed"].is_null() ? std::nullopt : std::optional(j["epsilon_fixed"].get<double>());
  }
  if (j.contains("early_stop_success")) {
    c.early_stop_success =
        j["early_stop_success"].is_null() ? std::nullopt : std::optional(j["early_stop_success"].get<double>());
  }
}

json sampler_to_json(const skills::SubgoalSampler& s) {
  return {{"reach_object_bias", s.reach_object_bias},
          {"transfer_goal_bias", s.transfer_goal_bias},
          {"bias_spread", s.bias_spread},
          {"lift_min", s.lift_min},
          {"lift_max", s.lift_max}};
}

void sampler_from_json(const json& j, skills::SubgoalSampler& s) {
  reject_unknown(j, {"reach_object_bias", "transfer_goal_bias", "bias_spread", "lift_min", "lift_max"}, "sampler");
  read(j, "reach_object_bias", s.reach_object_bias);
  read(j, "transfer_goal_bias", s.transfer_goal_bias);
  read(j, "bias_spread", s.bias_spread);
  read(j, "lift_min", s.lift_min);
  read(j, "lift_max", s.lift_max);
}

json regression_to_json(const skills::RegressionConfig& r) {
  return {{"hidden", r.hidden},         {"learning_rate", r.learning_rate},       {"batch_size", r.batch_size},
          {"epochs", r.epochs},         {"holdout_fraction", r.holdout_fraction}, {"min_rows", r.min_rows}};
}

void regression_from_json(const json& j, skills::RegressionConfig& r, const std::string& where) {
  reject_unknown(j, {"hidden", "learning_rate", "batch_size", "epochs", "holdout_fraction", "min_rows"}, where);
  read(j, "hidden", r.hidden);
  read(j, "learning_rate", r.learning_rate);
  read(j, "batch_size", r.batch_size);
  read(j, "epochs", r.epochs);
  read(j, "holdout_fraction", r.holdout_fraction);
  read(j, "min_rows", r.min_rows);
}

std::string hex_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(util::fnv1a(j.dump())));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot read '" + path.string() + "'");
  return json::parse(in);
}

bool stored_hash_matches(const std::filesystem::path& path, const std::string& key, const std::string& hash) {
  if (!std::filesystem::exists(path)) return false;
  try {
    const json j = read_json(path);
    return j.value(key, std::string()) == hash;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.train.epochs = c.epochs;
  c.skill_train.epochs = 50;
  c.skill_train.critic_lr = 1e-3;
  return c;
}

json ExperimentConfig::to_json() const {
  json j{{"schema_version", kConfigSchemaVersion},
         {"task", env::to_string(task)},
         {"method", to_string(method)},
         {"skill_set", to_string(skill_set)},
         {"seeds", seeds},
         {"epochs", epochs},
         {"output_dir", output_dir.string()},
         {"skill_seed", skill_seed},
         {"train", train_to_json(train)},
         {"skill_train", train_to_json(skill_train)},
         {"search",
          {{"branching_factor", search.branching_factor},
           {"max_height", search.max_height},
           {"prune_threshold", search.prune_threshold},
           {"sampler", sampler_to_json(search.sampler)}}},
         {"models",
          {{"episodes", models.collect.episodes},
           {"task_start_fraction", models.collect.task_start_fraction},
           {"sampler", sampler_to_json(models.collect.sampler)},
           {"dynamics", regression_to_json(models.dynamics)},
           {"success", regression_to_json(models.success)}}},
         {"pas", {{"random_action_prob", pas.random_action_prob}}}};
  j["skills_dir"] = skills_dir ? json(skills_dir->string()) : json(nullptr);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"schema_version", "task", "method", "skill_set", "seeds", "epochs", "output_dir", "skills_dir",
                  "skill_seed", "train", "skill_train", "search", "models", "pas"},
                 "config");
  const int version = j.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config schema version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  ExperimentConfig c = defaults();
  try {
    if (j.contains("task")) c.task = env::task_from_string(j["task"].get<std::string>());
    if (j.contains("method")) c.method = method_from_string(j["method"].get<std::string>());
    if (j.contains("skill_set")) c.skill_set = skill_set_from_string(j["skill_set"].get<std::string>());
    read(j, "seeds", c.seeds);
    read(j, "epochs", c.epochs);
    c.train.epochs = c.epochs;
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("skills_dir") && !j["skills_dir"].is_null()) c.skills_dir = j["skills_dir"].get<std::string>();
    read(j, "skill_seed", c.skill_seed);
    if (j.contains("train")) {
      train_from_json(j["train"], c.train, "train");
      if (!j.contains("epochs") && j["train"].contains("epochs")) c.epochs = c.train.epochs;
      c.train.epochs = c.epochs;
    }
    if (j.contains("skill_train")) train_from_json(j["skill_train"], c.skill_train, "skill_train");
    if (j.contains("search")) {
      const json& s = j["search"];
      reject_unknown(s, {"branching_factor", "max_height", "prune_threshold", "sampler"}, "search");
      read(s, "branching_factor", c.search.branching_factor);
      read(s, "max_height", c.search.max_height);
      read(s, "prune_threshold", c.search.prune_threshold);
      if (s.contains("sampler")) sampler_from_json(s["sampler"], c.search.sampler);
    }
    if (j.contains("models")) {
      const json& m = j["models"];
      reject_unknown(m, {"episodes", "task_start_fraction", "sampler", "dynamics", "success"}, "models");
      read(m, "episodes", c.models.collect.episodes);
      read(m, "task_start_fraction", c.models.collect.task_start_fraction);
      if (m.contains("sampler")) sampler_from_json(m["sampler"], c.models.collect.sampler);
      if (m.contains("dynamics")) regression_from_json(m["dynamics"], c.models.dynamics, "models.dynamics");
      if (m.contains("success")) regression_from_json(m["success"], c.models.success, "models.success");
    }
    if (j.contains("pas")) {
      reject_unknown(j["pas"], {"random_action_prob"}, "pas");
      read(j["pas"], "random_action_prob", c.pas.random_action_prob);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config value: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config: seeds must not be empty");
  if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
  try {
    train.validate();
    skill_train.validate();
    search.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (models.collect.episodes < 0) throw ConfigError("config: models.episodes must be >= 0");
  if (!(pas.random_action_prob >= 0.0 && pas.random_action_prob <= 1.0)) {
    throw ConfigError("config: pas.random_action_prob must lie in [0,1]");
  }
}

std::string ExperimentConfig::skill_hash() const { return hex_hash(train_to_json(skill_train)); }

std::string ExperimentConfig::model_hash() const {
  json j = to_json();
  return hex_hash(json{{"skill_train", j["skill_train"]}, {"models", j["models"]}});
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("seeds");
  j.erase("output_dir");
  j.erase("skills_dir");
  return hex_hash(j);
}

std::filesystem::path ExperimentConfig::skills_root() const { return skills_dir ? *skills_dir : output_dir / "skills"; }

std::filesystem::path ExperimentConfig::skill_dir(env::TaskId skill, std::uint64_t seed) const {
  return skills_root() / ("seed_" + std::to_string(seed)) / std::string(env::to_string(skill));
}

std::string ExperimentConfig::run_label() const {
  std::string label = to_string(method);
  if (method != Method::her) label += "_" + to_string(skill_set);
  if (method == Method::herlase) {
    label += "_b" + std::to_string(search.branching_factor) + "_h" + std::to_string(search.max_height);
  }
  return label;
}

std::filesystem::path ExperimentConfig::run_dir(std::uint64_t seed) const {
  return output_dir / std::string(env::to_string(task)) / run_label() / ("seed_" + std::to_string(seed));
}

json RunRecord::to_json() const {
  return {{"config_hash", config_hash},
          {"seed", seed},
          {"task", task},
          {"method", method},
          {"skill_set", skill_set},
          {"branching_factor", branching_factor},
          {"max_height", max_height},
          {"success", success},
          {"wall_clock_per_episode_s", wall_clock_per_episode_s},
          {"early_stopped", early_stopped},
          {"artifacts", artifacts}};
}

RunRecord RunRecord::from_json(const json& j) {
  RunRecord r;
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.task = j.at("task").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.skill_set = j.value("skill_set", std::string());
  r.branching_factor = j.value("branching_factor", 0);
  r.max_height = j.value("max_height", 0);
  r.success = j.at("success").get<std::vector<double>>();
  r.wall_clock_per_episode_s = j.value("wall_clock_per_episode_s", 0.0);
  r.early_stopped = j.value("early_stopped", false);
  r.artifacts = j.value("artifacts", std::map<std::string, std::string>{});
  return r;
}

RunRecord RunRecord::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

void RunRecord::save(const std::filesystem::path& path) const { write_text(path, to_json().dump(2) + "\n"); }

std::vector<SkillSummary> cmd_train_skills(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                           std::ostream& out, bool force) {
  cfg.validate();
  std::vector<SkillSummary> summaries;
  const std::string hash = cfg.skill_hash();
  for (std::uint64_t seed : seeds) {
    for (env::TaskId id : skills_in(cfg.skill_set)) {
      const auto dir = cfg.skill_dir(id, seed);
      SkillSummary s;
      s.skill = id;
      s.seed = seed;
      const auto meta_path = dir / "train.json";
      if (!force && stored_hash_matches(meta_path, "skill_hash", hash)) {
        const json meta = read_json(meta_path);
        s.final_success = meta.at("final_success").get<double>();
        s.epochs_run = meta.at("epochs_run").get<int>();
        s.reused = true;
      } else {
        std::filesystem::create_directories(dir);
        // Drop fitted models of a previous policy so they cannot be paired
        // with the new one.
        std::filesystem::remove(dir / "models.ckpt");
        std::filesystem::remove(dir / "models.json");
        rl::TrainResult r = rl::train_skill(id, cfg.skill_train, seed, [&](const rl::EpochLog& row, const rl::ActorCritic&) {
          out << env::to_string(id) << " seed " << seed << " epoch " << row.epoch << " success " << row.success_rate
              << '\n';
        });
        skills::make_skill(id, std::move(r.policy)).save(dir);
        r.log.write_csv(dir / "train_log.csv");
        s.final_success = r.log.rows.back().success_rate;
        s.epochs_run = static_cast<int>(r.log.rows.size());
        write_text(meta_path, json{{"skill_hash", hash},
                                   {"seed", seed},
                                   {"skill", env::to_string(id)},
                                   {"final_success", s.final_success},
                                   {"epochs_run", s.epochs_run},
                                   {"early_stopped", r.log.early_stopped}}
                                      .dump(2) +
                                  "\n");
      }
      out << "skill " << env::to_string(id) << " seed " << seed << ": final success " << s.final_success << " after "
          << s.epochs_run << " epochs" << (s.reused ? " (cached)" : "") << '\n';
      summaries.push_back(s);
    }
  }
  return summaries;
}

namespace {

json fit_report_json(const skills::FitReport& r) {
  return {{"train_rows", r.train_rows},
          {"heldout_rows", r.heldout_rows},
          {"final_train_loss", r.final_train_loss},
          {"heldout_metric", r.heldout_metric},
          {"degenerate_labels", r.degenerate_labels}};
}

skills::FitReport fit_report_from(const json& j) {
  skills::FitReport r;
  r.train_rows = j.at("train_rows").get<std::size_t>();
  r.heldout_rows = j.at("heldout_rows").get<std::size_t>();
  r.final_train_loss = j.at("final_train_loss").get<double>();
  r.heldout_metric = j.at("heldout_metric").get<double>();
  r.degenerate_labels = j.at("degenerate_labels").get<bool>();
  return r;
}

}  // namespace

std::vector<ModelSummary> cmd_fit_models(const ExperimentConfig& cfg, std::ostream& out, bool force) {
  cfg.validate();
  std::vector<ModelSummary> summaries;
  const std::string hash = cfg.model_hash();
  for (env::TaskId id : skills_in(cfg.skill_set)) {
    const auto dir = cfg.skill_dir(id, cfg.skill_seed);
    if (!stored_hash_matches(dir / "train.json", "skill_hash", cfg.skill_hash())) {
      throw MissingArtifact("skill '" + std::string(env::to_string(id)) + "' (seed " +
                            std::to_string(cfg.skill_seed) + ") has not been trained under this config in '" +
                            dir.string() + "'; run train-skills first");
    }
    ModelSummary m;
    m.skill = id;
    const auto report_path = dir / "models.json";
    if (!force && stored_hash_matches(report_path, "model_hash", hash) && std::filesystem::exists(dir / "models.ckpt")) {
      const json j = read_json(report_path);
      m.rows = j.at("rows").get<std::size_t>();
      m.success_fraction = j.at("success_fraction").get<double>();
      m.dynamics = fit_report_from(j.at("dynamics"));
      m.success = fit_report_from(j.at("success"));
      m.seconds = j.value("seconds", 0.0);
      m.reused = true;
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      const skills::Skill skill = skills::Skill::load(dir);
      const std::uint64_t seed = util::derive_seed(cfg.skill_seed, std::string("models/") + skill.name());
      const skills::SkillDataset ds = skills::collect_skill_data(skill, cfg.models.collect, seed);
      ds.write_csv(dir / "dataset.csv");
      skills::SkillBundle b;
      b.skill = skill;
      b.dynamics = skills::train_dynamics(ds, cfg.models.dynamics, seed, &m.dynamics);
      b.success = skills::train_success(ds, cfg.models.success, seed, &m.success);
      b.save(dir);
      m.rows = ds.size();
      m.success_fraction = ds.success_fraction();
      m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_text(report_path, json{{"model_hash", hash},
                                   {"seconds", m.seconds},
                                   {"rows", m.rows},
                                   {"success_fraction", m.success_fraction},
                                   {"dynamics", fit_report_json(m.dynamics)},
                                   {"success", fit_report_json(m.success)}}
                                      .dump(2) +
                                  "\n");
    }
    out << "models " << env::to_string(id) << ": rows " << m.rows << " success fraction " << m.success_fraction
        << " dynamics held-out error " << m.dynamics.heldout_metric << " success held-out accuracy "
        << m.success.heldout_metric << (m.success.degenerate_labels ? " (degenerate labels)" : "")
        << (m.reused ? " (cached)" : "") << '\n';
    summaries.push_back(m);
  }
  return summaries;
}

std::vector<skills::SkillBundle> load_skill_set(const ExperimentConfig& cfg) {
  std::vector<skills::SkillBundle> bundles;
  for (env::TaskId id : skills_in(cfg.skill_set)) {
    const auto dir = cfg.skill_dir(id, cfg.skill_seed);
    if (!stored_hash_matches(dir / "models.json", "model_hash", cfg.model_hash())) {
      throw MissingArtifact("no fitted bundle for skill '" + std::string(env::to_string(id)) + "' in '" +
                            dir.string() + "'; run train-skills and fit-models first");
    }
    bundles.push_back(skills::SkillBundle::load(dir));
  }
  return bundles;
}

std::vector<RunRecord> cmd_train_task(const ExperimentConfig& cfg, std::ostream& out, bool force) {
  cfg.validate();
  const std::string hash = cfg.hash();
  std::vector<skills::SkillBundle> bundles;
  if (cfg.method != Method::her) bundles = load_skill_set(cfg);
  const env::TaskSpec task = env::make_task(cfg.task);
  std::vector<RunRecord> records;
  for (std::uint64_t seed : cfg.seeds) {
    const auto dir = cfg.run_dir(seed);
    const auto record_path = dir / "record.json";
    if (!force && stored_hash_matches(record_path, "config_hash", hash)) {
      RunRecord r = RunRecord::load(record_path);
      out << cfg.run_label() << " " << env::to_string(cfg.task) << " seed " << seed << ": cached, final success "
          << (r.success.empty() ? 0.0 : r.success.back()) << '\n';
      records.push_back(std::move(r));
      continue;
    }
    std::filesystem::create_directories(dir);
    auto progress = [&](const rl::EpochLog& row) {
      out << cfg.run_label() << " " << env::to_string(cfg.task) << " seed " << seed << " epoch " << row.epoch
          << " success " << row.success_rate << '\n';
      out.flush();
    };
    rl::TrainingLog log;
    nn::Checkpoint ckpt;
    switch (cfg.method) {
      case Method::herlase: {
        rl::TrainResult r = lookahead::herlase_train(task, bundles, cfg.train, cfg.search, seed,
                                                     [&](const rl::EpochLog& row, const rl::ActorCritic&) { progress(row); });
        r.policy.save(ckpt, "policy");
        log = std::move(r.log);
        break;
      }
      case Method::her: {
        rl::TrainResult r = baselines::her_baseline_train(
            task, cfg.train, seed, [&](const rl::EpochLog& row, const rl::ActorCritic&) { progress(row); });
        r.policy.save(ckpt, "policy");
        log = std::move(r.log);
        break;
      }
      case Method::pas: {
        baselines::PasResult r = baselines::pas_train(task, bundles, cfg.train, cfg.pas, seed, progress);
        ckpt.put_mlp("pas/actor", r.agent.actor);
        ckpt.put_mlp("pas/critic", r.agent.critic);
        log = std::move(r.log);
        break;
      }
    }
    log.write_csv(dir / "log.csv");
    nn::save_checkpoint(dir / "policy.ckpt", ckpt);

    RunRecord rec;
    rec.config_hash = hash;
    rec.seed = seed;
    rec.task = std::string(env::to_string(cfg.task));
    rec.method = to_string(cfg.method);
    rec.skill_set = cfg.method == Method::her ? "" : to_string(cfg.skill_set);
    rec.branching_factor = cfg.method == Method::herlase ? cfg.search.branching_factor : 0;
    rec.max_height = cfg.method == Method::herlase ? cfg.search.max_height : 0;
    double wall = 0.0;
    for (const auto& row : log.rows) {
      rec.success.push_back(row.success_rate);
      wall += row.wall_clock_s;
    }
    const long episodes = log.rows.empty() ? 0 : log.rows.back().episodes;
    rec.wall_clock_per_episode_s = episodes > 0 ? wall / static_cast<double>(episodes) : 0.0;
    rec.early_stopped = log.early_stopped;
    rec.artifacts = {{"log", (dir / "log.csv").string()}, {"checkpoint", (dir / "policy.ckpt").string()}};
    rec.save(record_path);
    write_text(dir / "config.json", cfg.to_json().dump(2) + "\n");
    out << cfg.run_label() << " " << env::to_string(cfg.task) << " seed " << seed << ": final success "
        << (rec.success.empty() ? 0.0 : rec.success.back()) << '\n';
    records.push_back(std::move(rec));
  }
  return records;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::optional<int> epochs_to_threshold(const std::vector<double>& success, double threshold) {
  for (std::size_t i = 0; i < success.size(); ++i) {
    if (success[i] >= threshold) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<double> median_epochs_to_threshold(const std::vector<std::vector<double>>& runs, double threshold) {
  if (runs.empty()) return std::nullopt;
  std::vector<double> e;
  for (const auto& r : runs) {
    const auto k = epochs_to_threshold(r, threshold);
    e.push_back(k ? static_cast<double>(*k) : std::numeric_limits<double>::infinity());
  }
  const double m = median(e);
  if (!std::isfinite(m)) return std::nullopt;
  return m;
}

std::vector<double> median_curve(const std::vector<std::vector<double>>& runs) {
  if (runs.empty()) return {};
  std::size_t len = runs.front().size();
  for (const auto& r : runs) len = std::min(len, r.size());
  std::vector<double> out(len);
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<double> col;
    for (const auto& r : runs) col.push_back(r[i]);
    out[i] = median(col);
  }
  return out;
}

std::vector<RunRecord> find_records(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> paths;
  if (std::filesystem::exists(root)) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() == "record.json") paths.push_back(e.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  std::vector<RunRecord> out;
  for (const auto& p : paths) out.push_back(RunRecord::load(p));
  return out;
}

Report cmd_report(const std::vector<RunRecord>& records, const ReportOptions& opt) {
  if (records.empty()) throw MissingArtifact("report: no run records");
  using Key = std::tuple<std::string, std::string, std::string, int, int>;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[{r.task, r.method, r.skill_set, r.branching_factor, r.max_height}].push_back(&r);

  Report rep;
  rep.curves_csv = "task,method,skill_set,branching,height,epoch,median_success,seeds\n";
  rep.thresholds_csv = "task,method,skill_set,branching,height,threshold,median_epoch\n";
  rep.wall_clock_csv = "task,method,skill_set,branching,height,median_wall_clock_per_episode_s\n";
  std::ostringstream summary;
  char buf[256];
  for (const auto& [key, runs] : groups) {
    const auto& [task, method, skill_set, b, h] = key;
    std::set<std::string> hashes;
    std::set<std::uint64_t> seeds;
    for (const RunRecord* r : runs) {
      hashes.insert(r->config_hash);
      if (!seeds.insert(r->seed).second) {
        throw std::runtime_error("report: duplicate seed " + std::to_string(r->seed) + " for " + task + "/" + method);
      }
    }
    if (hashes.size() > 1) {
      throw std::runtime_error("report: runs of " + task + "/" + method + "/" + skill_set +
                               " were produced by different configs");
    }
    std::vector<std::vector<double>> curves;
    std::vector<double> walls;
    for (const RunRecord* r : runs) {
      curves.push_back(r->success);
      walls.push_back(r->wall_clock_per_episode_s);
    }
    const std::string prefix = task + "," + method + "," + skill_set + "," + std::to_string(b) + "," + std::to_string(h);
    const auto curve = median_curve(curves);
    for (std::size_t e = 0; e < curve.size(); ++e) {
      std::snprintf(buf, sizeof buf, ",%zu,%.6f,%zu\n", e, curve[e], runs.size());
      rep.curves_csv += prefix + buf;
    }
    for (double t : opt.thresholds) {
      const auto m = median_epochs_to_threshold(curves, t);
      if (m) {
        std::snprintf(buf, sizeof buf, ",%.2f,%.1f\n", t, *m);
      } else {
        std::snprintf(buf, sizeof buf, ",%.2f,NA\n", t);
      }
      rep.thresholds_csv += prefix + buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f\n", median(walls));
    rep.wall_clock_csv += prefix + buf;
    std::snprintf(buf, sizeof buf, "%-14s %-8s %-3s b=%-2d h=%d  seeds=%zu  final median success %.3f\n", task.c_str(),
                  method.c_str(), skill_set.empty() ? "-" : skill_set.c_str(), b, h, runs.size(),
                  curve.empty() ? 0.0 : curve.back());
    summary << buf;
  }
  rep.summary = summary.str();
  return rep;
}

}  // namespace herlase::harness
