// Command-line front end: train-skills, fit-models, train-task, report.

#include "herlase/harness/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using herlase::harness::ExperimentConfig;

struct Overrides {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  int branching = 0;
  int height = 0;
  std::string method;
  std::string skill_set;
  std::string task;
  int epochs = 0;
  bool force = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "seed; repeat for several (overrides config seeds)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--branching", o.branching, "search branching factor B")->check(CLI::PositiveNumber);
  cmd->add_option("--height", o.height, "search height H")->check(CLI::PositiveNumber);
  cmd->add_option("--method", o.method, "herlase, her or pas");
  cmd->add_option("--skill-set", o.skill_set, "k1, k2 or k3");
  cmd->add_option("--task", o.task, "task name, e.g. put_inside");
  cmd->add_option("--epochs", o.epochs, "training epochs")->check(CLI::PositiveNumber);
  cmd->add_flag("--force", o.force, "recompute even when matching artifacts exist");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig::defaults() : ExperimentConfig::load(o.config);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.branching > 0) c.search.branching_factor = o.branching;
  if (o.height > 0) c.search.max_height = o.height;
  if (!o.method.empty()) c.method = herlase::harness::method_from_string(o.method);
  if (!o.skill_set.empty()) c.skill_set = herlase::harness::skill_set_from_string(o.skill_set);
  if (!o.task.empty()) c.task = herlase::env::task_from_string(o.task);
  if (o.epochs > 0) {
    c.epochs = o.epochs;
    c.train.epochs = o.epochs;
  }
  c.validate();
  return c;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-conditioned RL with look-ahead skill search"};
  app.require_subcommand(1);
  Overrides o;

  auto* train_skills = app.add_subcommand("train-skills", "train reach/grasp/transfer skills");
  add_common(train_skills, o);
  auto* fit_models = app.add_subcommand("fit-models", "fit success and dynamics models of trained skills");
  add_common(fit_models, o);
  auto* train_task = app.add_subcommand("train-task", "train a task policy with the configured method");
  add_common(train_task, o);
  auto* report = app.add_subcommand("report", "aggregate run records into comparison CSVs");
  add_common(report, o);
  std::string runs_dir;
  report->add_option("--runs", runs_dir, "directory searched for record.json files (default: config output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = resolve(o);
    if (*train_skills) {
      const auto summaries = herlase::harness::cmd_train_skills(cfg, cfg.seeds, std::cout, o.force);
      for (const auto& s : summaries) {
        std::cout << herlase::env::to_string(s.skill) << "," << s.seed << "," << s.final_success << "\n";
      }
    } else if (*fit_models) {
      herlase::harness::cmd_fit_models(cfg, std::cout, o.force);
    } else if (*train_task) {
      herlase::harness::cmd_train_task(cfg, std::cout, o.force);
    } else if (*report) {
      const std::filesystem::path root = runs_dir.empty() ? cfg.output_dir : std::filesystem::path(runs_dir);
      const auto rep = herlase::harness::cmd_report(herlase::harness::find_records(root));
      const std::filesystem::path dest = o.out.empty() ? root : std::filesystem::path(o.out);
      std::filesystem::create_directories(dest);
      write_file(dest / "curves.csv", rep.curves_csv);
      write_file(dest / "epochs_to_threshold.csv", rep.thresholds_csv);
      write_file(dest / "wall_clock.csv", rep.wall_clock_csv);
      std::cout << rep.summary;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
