// Acceptance runner: one PASS/FAIL line per criterion.
//   herlase_acceptance [--cache DIR] [A1 ... A11]
// Expensive artifacts (skills, models, task runs) are cached under DIR and
// reused when their config hashes match.

#include "herlase/baselines/baselines.hpp"
#include "herlase/harness/experiment.hpp"
#include "herlase/lookahead/herlase.hpp"
#include "herlase/rl/her.hpp"
#include "support/oracles.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace herlase;
namespace fs = std::filesystem;
using harness::ExperimentConfig;
using harness::Method;
using harness::SkillSet;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-4;
constexpr int kGradProbes = 50;
constexpr std::size_t kGradCoords = 300;
constexpr double kGradBudgetS = 60.0;
constexpr double kKinkMargin = 1e-3;
constexpr int kHerEpisodes = 1000;
constexpr double kSkillSuccess = 0.90;
constexpr double kSkillBudgetS = 15 * 60.0;
constexpr double kDynamicsErr = 0.05;
constexpr double kSuccessAcc = 0.85;
constexpr double kModelBudgetS = 10 * 60.0;
constexpr int kSearches = 200;
constexpr double kA6Herlase = 0.6;
constexpr double kBaselineCeiling = 0.2;
constexpr double kA6BudgetS = 60 * 60.0;
constexpr double kA7Threshold = 0.8;
constexpr double kA9Herlase = 0.4;
constexpr int kFinalWindow = 10;
constexpr int kShortEpochs = 3;

fs::path g_cache = "acceptance";
std::ostringstream g_log;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Training time recorded in a log, summed over epochs.
double logged_seconds(const fs::path& log_csv) {
  double s = 0.0;
  for (const auto& row : rl::TrainingLog::read_csv(log_csv).rows) s += row.wall_clock_s;
  return s;
}

ExperimentConfig base_config() {
  auto c = ExperimentConfig::defaults();
  c.output_dir = g_cache;
  return c;
}

ExperimentConfig task_config(env::TaskId task, Method m, SkillSet k = SkillSet::k1) {
  auto c = base_config();
  c.task = task;
  c.method = m;
  c.skill_set = k;
  return c;
}

std::vector<skills::SkillBundle> ensure_bundles(SkillSet k = SkillSet::k1) {
  auto c = base_config();
  c.skill_set = k;
  harness::cmd_train_skills(c, {c.skill_seed}, g_log);
  harness::cmd_fit_models(c, g_log);
  return harness::load_skill_set(c);
}

std::vector<std::vector<double>> curves(const ExperimentConfig& cfg) {
  std::vector<std::vector<double>> out;
  for (const auto& r : harness::cmd_train_task(cfg, g_log)) out.push_back(r.success);
  return out;
}

double curve_peak(const std::vector<std::vector<double>>& runs) {
  const auto m = harness::median_curve(runs);
  return m.empty() ? 0.0 : *std::max_element(m.begin(), m.end());
}

// Median over seeds of the mean success over the last kFinalWindow epochs.
double final_success(const std::vector<std::vector<double>>& runs) {
  std::vector<double> v;
  for (const auto& r : runs) {
    const std::size_t n = std::min<std::size_t>(kFinalWindow, r.size());
    double s = 0.0;
    for (std::size_t i = r.size() - n; i < r.size(); ++i) s += r[i];
    v.push_back(n ? s / static_cast<double>(n) : 0.0);
  }
  return harness::median(v);
}

double epochs_to(const std::vector<std::vector<double>>& runs, double t) {
  return harness::median_epochs_to_threshold(runs, t).value_or(std::numeric_limits<double>::infinity());
}

std::string epochs_str(double e) { return std::isinf(e) ? "never" : fmt("%.1f", e); }

// A1 ---------------------------------------------------------------------

// Smallest |pre-activation| of any hidden unit; finite differences across a
// relu kink measure the kink, not the gradient.
double kink_margin(const nn::Mlp& net, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < net.weights().size(); ++l) {
    const Eigen::VectorXd z = net.weights()[l] * h + net.biases()[l];
    margin = std::min(margin, z.cwiseAbs().minCoeff());
    h = z.cwiseMax(0.0);
  }
  return margin;
}

Outcome a1() {
  struct Arch {
    const char* name;
    std::vector<int> sizes;
    nn::Activation out;
  };
  const int in = env::kObservationDim + env::kGoalDim;
  const std::vector<Arch> archs{
      {"actor", {in, 64, 64, 64, env::kActionDim}, nn::Activation::tanh},
      {"critic", {in + env::kActionDim, 64, 64, 64, 1}, nn::Activation::linear},
      {"success", {in, 50, 100, 1}, nn::Activation::sigmoid},
      {"dynamics", {in, 128, 128, 128, env::kObservationDim}, nn::Activation::linear},
  };
  double worst = 0.0;
  std::string worst_name;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, 1.0);
  for (const auto& a : archs) {
    for (int p = 0; p < kGradProbes; ++p) {
      const nn::Mlp net(a.sizes, nn::Activation::relu, a.out, rng());
      Eigen::VectorXd x;
      do {
        x = Eigen::VectorXd::NullaryExpr(a.sizes.front(), [&] { return d(rng); });
      } while (kink_margin(net, x) < kKinkMargin);
      const Eigen::VectorXd up = Eigen::VectorXd::NullaryExpr(a.sizes.back(), [&] { return d(rng); });
      const double e = oracle::gradient_check(net, x, up, 1e-5, kGradCoords, rng());
      if (e > worst) {
        worst = e;
        worst_name = a.name;
      }
    }
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst < kGradTol && s < kGradBudgetS,
          "worst relative error " + fmt("%.2e", worst) + " (" + worst_name + "), " + fmt("%.1f", s) + " s"};
}

// A2 ---------------------------------------------------------------------

class UniformExplorer : public rl::Explorer {
 public:
  rl::Vector act(const env::WorldState&, const rl::Vector&, const rl::Vector&, rl::ExplorationContext& ctx) override {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return rl::Vector::NullaryExpr(ctx.policy.action_dim, [&] { return u(ctx.noise_rng); });
  }
};

Outcome a2() {
  const std::vector<env::TaskId> tasks{env::TaskId::reach,      env::TaskId::grasp,      env::TaskId::transfer,
                                       env::TaskId::pick_and_move, env::TaskId::put_inside, env::TaskId::stack};
  long checked = 0, mismatches = 0;
  for (int e = 0; e < kHerEpisodes; ++e) {
    const env::TaskId id = tasks[static_cast<std::size_t>(e) % tasks.size()];
    const auto task = env::make_task(id);
    const auto space = rl::space_for(id);
    const auto ac = rl::ActorCritic::create(space.observation_dim(), 3, space.action_dim, {8}, 0.98, 1);
    std::mt19937_64 noise(static_cast<std::uint64_t>(e)), explore(static_cast<std::uint64_t>(e) + 7);
    rl::ExplorationContext ctx{ac, 0.0, 0.0, noise, explore};
    UniformExplorer ex;
    const auto ep = rl::collect_episode(task, space, static_cast<std::uint64_t>(e), ex, ctx);
    const auto re = rl::her_relabel(ep, task, space);
    const bool gripper_goal = id == env::TaskId::reach;
    auto ach = [&](const Eigen::VectorXd& s) {
      return gripper_goal ? env::Vec3(s.head<3>()) : env::Vec3(s.segment<3>(env::kObjectPos));
    };
    const env::Vec3 g_final = ach(ep.back().next_state);
    for (std::size_t t = 0; t < ep.size(); ++t) {
      ++checked;
      const double want = oracle::task_reward(ach(ep[t].next_state), g_final, task);
      if (re[t].reward != want || !re[t].goal.isApprox(g_final, 0.0)) ++mismatches;
    }
  }
  return {mismatches == 0 && checked > 0, std::to_string(checked) + " relabelled transitions over " +
                                              std::to_string(kHerEpisodes) + " episodes, " +
                                              std::to_string(mismatches) + " mismatches"};
}

// A3 ---------------------------------------------------------------------

Outcome a3() {
  const auto cfg = base_config();
  const auto sums = harness::cmd_train_skills(cfg, {1, 2, 3}, g_log);
  std::map<env::TaskId, std::vector<double>> by_skill;
  bool epochs_ok = true;
  double s = 0.0;
  for (const auto& x : sums) {
    s += logged_seconds(cfg.skill_dir(x.skill, x.seed) / "train_log.csv");
    by_skill[x.skill].push_back(x.final_success);
    epochs_ok = epochs_ok && x.epochs_run <= cfg.skill_train.epochs;
  }
  bool ok = epochs_ok && s < kSkillBudgetS;
  std::string detail;
  for (const auto& [id, v] : by_skill) {
    const double m = harness::median(v);
    ok = ok && m >= kSkillSuccess;
    detail += std::string(env::to_string(id)) + " " + fmt("%.2f", m) + ", ";
  }
  return {ok, "median final success: " + detail + fmt("%.0f", s) + " s"};
}

// A4 ---------------------------------------------------------------------

Outcome a4() {
  const auto cfg = base_config();
  harness::cmd_train_skills(cfg, {cfg.skill_seed}, g_log);
  const auto sums = harness::cmd_fit_models(cfg, g_log);
  double s = 0.0;
  for (const auto& m : sums) s += m.seconds;
  bool ok = s < kModelBudgetS && !sums.empty();
  std::string detail;
  for (const auto& m : sums) {
    ok = ok && m.dynamics.heldout_metric < kDynamicsErr && m.success.heldout_metric >= kSuccessAcc;
    detail += std::string(env::to_string(m.skill)) + " err " + fmt("%.3f", m.dynamics.heldout_metric) + " acc " +
              fmt("%.3f", m.success.heldout_metric) + ", ";
  }
  return {ok, detail + fmt("%.0f", s) + " s"};
}

// A5 ---------------------------------------------------------------------

Outcome a5() {
  const auto bundles = ensure_bundles();
  const std::vector<env::TaskId> tasks{env::TaskId::pick_and_move, env::TaskId::put_inside, env::TaskId::stack};
  int agree = 0, planned = 0, pruned_on_path = 0, no_plan_mismatch = 0;
  for (int i = 0; i < kSearches; ++i) {
    const auto task = env::make_task(tasks[static_cast<std::size_t>(i) % tasks.size()]);
    std::mt19937_64 rng(static_cast<std::uint64_t>(1000 + i));
    lookahead::SearchConfig sc;
    sc.branching_factor = 1 + static_cast<int>(rng() % 5);
    sc.max_height = 1 + static_cast<int>(rng() % 3);
    auto [state, goal] = env::reset(task, rng());
    // Move the gripper somewhere random so skills other than reach matter.
    std::uniform_real_distribution<double> u(0.05, 0.95);
    if (i % 2) state.gripper_pos = {u(rng), u(rng), 0.5 * u(rng)};
    const Eigen::VectorXd obs = env::observe(state);
    const auto r = lookahead::tree_search(obs, goal, task, bundles, sc, rng);
    const auto e = oracle::enumerate_paths(r.trace, obs, goal, task, bundles, sc.max_height, sc.prune_threshold);
    if (e.all.empty()) {
      no_plan_mismatch += r.best.has_value();
      agree += !r.best.has_value();
      continue;
    }
    ++planned;
    if (!r.best) {
      ++no_plan_mismatch;
      continue;
    }
    const auto first = *r.first();
    const auto& want = e.best.steps.front();
    if (first.skill == want.skill && first.subgoal == want.subgoal &&
        r.best->total_score == e.best.score) {
      ++agree;
    }
    // Every node on the returned path must have survived pruning.
    int node = 0;
    for (const auto& c : r.best->steps) {
      int next = -1;
      for (const auto& n : r.trace.nodes) {
        if (n.parent == node && n.skill == c.skill && n.subgoal == c.subgoal) {
          next = n.id;
          break;
        }
      }
      if (next < 0 || r.trace.nodes[static_cast<std::size_t>(next)].pruned ||
          !(r.trace.nodes[static_cast<std::size_t>(next)].u > sc.prune_threshold)) {
        ++pruned_on_path;
        break;
      }
      node = next;
    }
  }
  const bool ok = agree == kSearches && pruned_on_path == 0 && no_plan_mismatch == 0;
  return {ok, std::to_string(agree) + "/" + std::to_string(kSearches) + " searches agree with enumeration (" +
                  std::to_string(planned) + " with a plan), " + std::to_string(pruned_on_path) +
                  " pruned candidates on paths"};
}

// A6-A9 ------------------------------------------------------------------

Outcome a6() {
  ensure_bundles();
  const auto la_cfg = task_config(env::TaskId::put_inside, Method::herlase);
  const auto her_cfg = task_config(env::TaskId::put_inside, Method::her);
  const auto la = curves(la_cfg);
  const auto her = curves(her_cfg);
  double s = 0.0;
  for (const auto* c : {&la_cfg, &her_cfg}) {
    for (auto seed : c->seeds) s += logged_seconds(c->run_dir(seed) / "log.csv");
  }
  const double pl = curve_peak(la), ph = curve_peak(her);
  return {pl >= kA6Herlase && ph < kBaselineCeiling && s < kA6BudgetS,
          "put_inside peak median success HERLASE " + fmt("%.2f", pl) + " vs HER " + fmt("%.2f", ph) + ", " +
              fmt("%.0f", s) + " s"};
}

Outcome a7() {
  ensure_bundles();
  const auto la = curves(task_config(env::TaskId::pick_and_move, Method::herlase));
  const auto her = curves(task_config(env::TaskId::pick_and_move, Method::her));
  const auto pas = curves(task_config(env::TaskId::pick_and_move, Method::pas));
  const double el = epochs_to(la, kA7Threshold), eh = epochs_to(her, kA7Threshold);
  const double fl = final_success(la), fp = final_success(pas);
  return {!std::isinf(el) && el < eh && fp < fl,
          "epochs to 0.8: HERLASE " + epochs_str(el) + " vs HER " + epochs_str(eh) + "; final success PAS " +
              fmt("%.2f", fp) + " vs HERLASE " + fmt("%.2f", fl)};
}

Outcome a8() {
  ensure_bundles(SkillSet::k1);
  const auto k1_pm = curves(task_config(env::TaskId::pick_and_move, Method::herlase, SkillSet::k1));
  const auto k2_pm = curves(task_config(env::TaskId::pick_and_move, Method::herlase, SkillSet::k2));
  const auto k1_pi = curves(task_config(env::TaskId::put_inside, Method::herlase, SkillSet::k1));
  const auto k3_pi = curves(task_config(env::TaskId::put_inside, Method::herlase, SkillSet::k3));
  const auto her_pi = curves(task_config(env::TaskId::put_inside, Method::her));
  const double e1 = epochs_to(k1_pm, kA7Threshold), e2 = epochs_to(k2_pm, kA7Threshold);
  const double p1 = epochs_to(k1_pi, kA6Herlase), p3 = epochs_to(k3_pi, kA6Herlase);
  const double f3 = final_success(k3_pi), fh = final_success(her_pi);
  const bool ok = !std::isinf(e1) && e1 <= e2 && !std::isinf(p1) && p3 > p1 && f3 > fh;
  return {ok, "pick_and_move epochs to 0.8: K1 " + epochs_str(e1) + " vs K2 " + epochs_str(e2) +
                  "; put_inside epochs to 0.6: K1 " + epochs_str(p1) + " vs K3 " + epochs_str(p3) +
                  "; final success K3 " + fmt("%.2f", f3) + " vs HER " + fmt("%.2f", fh)};
}

Outcome a9() {
  ensure_bundles();
  const auto la = curves(task_config(env::TaskId::put_inside_high_wall, Method::herlase));
  const auto her = curves(task_config(env::TaskId::put_inside_high_wall, Method::her));
  const double pl = curve_peak(la), ph = curve_peak(her);
  return {pl >= kA9Herlase && ph < kBaselineCeiling,
          "put_inside_high_wall peak median success HERLASE " + fmt("%.2f", pl) + " vs HER " + fmt("%.2f", ph)};
}

// A10-A11 ----------------------------------------------------------------

rl::TrainConfig short_train() {
  auto c = base_config().train;
  c.epochs = kShortEpochs;
  return c;
}

Outcome a10() {
  const auto bundles = ensure_bundles();
  const auto search = base_config().search;
  int identical = 0;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  for (std::uint64_t seed : seeds) {
    const auto task = env::make_task(env::TaskId::put_inside);
    auto cfg = short_train();
    const auto her = baselines::her_baseline_train(task, cfg, seed);
    cfg.epsilon_fixed = 0.0;
    const auto la = lookahead::herlase_train(task, bundles, cfg, search, seed);
    identical += her.log.to_csv(false) == la.log.to_csv(false);
  }
  return {identical == static_cast<int>(seeds.size()),
          std::to_string(identical) + "/" + std::to_string(seeds.size()) +
              " seeds give identical logs (wall clock excluded)"};
}

Outcome a11() {
  const auto bundles = ensure_bundles();
  const auto task = env::make_task(env::TaskId::put_inside);
  const auto search = base_config().search;
  const auto cfg = short_train();
  auto skill_cfg = base_config().skill_train;
  skill_cfg.epochs = kShortEpochs;
  std::vector<std::pair<std::string, std::function<std::string()>>> runs{
      {"skill", [&] { return rl::train_skill(env::TaskId::grasp, skill_cfg, 4).log.to_csv(false); }},
      {"herlase", [&] { return lookahead::herlase_train(task, bundles, cfg, search, 4).log.to_csv(false); }},
      {"her", [&] { return baselines::her_baseline_train(task, cfg, 4).log.to_csv(false); }},
      {"pas", [&] { return baselines::pas_train(task, bundles, cfg, {}, 4).log.to_csv(false); }},
  };
  std::string bad;
  for (const auto& [name, run] : runs) {
    if (run() != run()) bad += name + " ";
  }
  // The cached full-length runs must also reproduce when recomputed.
  auto full = task_config(env::TaskId::pick_and_move, Method::herlase);
  full.seeds = {1};
  const auto cached = harness::cmd_train_task(full, g_log);
  const auto log_path = full.run_dir(1) / "log.csv";
  const std::string before = rl::TrainingLog::read_csv(log_path).to_csv(false);
  const auto rerun = lookahead::herlase_train(env::make_task(full.task), bundles, full.train, full.search, 1);
  if (rerun.log.to_csv(false) != before) bad += "cached-pick_and_move ";
  return {bad.empty(), bad.empty() ? "skill, herlase, her and pas logs reproduce bit-identically (wall clock excluded)"
                                   : "logs differ for: " + bad};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cache" && i + 1 < argc) {
      g_cache = argv[++i];
    } else {
      wanted.push_back(a);
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},   {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};
  int failures = 0;
  for (const auto& [id, fn] : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), id) == wanted.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
