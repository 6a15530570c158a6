#include "herlase/skills/models.hpp"

#include "herlase/nn/adam.hpp"
#include "herlase/util/seed.hpp"

#include <algorithm>
#include <iterator>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace herlase::skills {

using nn::Matrix;

double SkillDataset::success_fraction() const {
  if (rows.empty()) return 0.0;
  const auto k = std::count_if(rows.begin(), rows.end(), [](const SkillDatasetRow& r) { return r.success; });
  return static_cast<double>(k) / static_cast<double>(rows.size());
}

SkillDataset SkillDataset::skill_env_rows() const {
  SkillDataset out;
  out.skill = skill;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out.rows),
               [](const SkillDatasetRow& r) { return !r.task_start; });
  return out;
}

void SkillDataset::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset '" + path.string() + "'");
  const int s_dim = rows.empty() ? env::kObservationDim : static_cast<int>(rows.front().start_state.size());
  const int g_dim = rows.empty() ? env::kGoalDim : static_cast<int>(rows.front().goal.size());
  for (int i = 0; i < s_dim; ++i) out << "s_" << i << ',';
  for (int i = 0; i < g_dim; ++i) out << "g_" << i << ',';
  for (int i = 0; i < s_dim; ++i) out << "sf_" << i << ',';
  out << "success,task_start\n";
  out.precision(17);
  for (const auto& r : rows) {
    for (double v : r.start_state) out << v << ',';
    for (double v : r.goal) out << v << ',';
    for (double v : r.final_state) out << v << ',';
    out << (r.success ? 1 : 0) << ',' << (r.task_start ? 1 : 0) << '\n';
  }
}

SkillDataset SkillDataset::read_csv(const std::filesystem::path& path, env::TaskId skill) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dataset '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  int s_dim = 0, g_dim = 0;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.rfind("s_", 0) == 0) ++s_dim;
      else if (cell.rfind("g_", 0) == 0) ++g_dim;
    }
  }
  if (s_dim == 0 || g_dim == 0) throw std::runtime_error("malformed dataset header in '" + path.string() + "'");
  SkillDataset ds;
  ds.skill = skill;
  const std::size_t expected = static_cast<std::size_t>(2 * s_dim + g_dim + 2);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != expected) throw std::runtime_error("malformed dataset row in '" + path.string() + "'");
    SkillDatasetRow r;
    r.start_state = Eigen::Map<const Vector>(v.data(), s_dim);
    r.goal = Eigen::Map<const Vector>(v.data() + s_dim, g_dim);
    r.final_state = Eigen::Map<const Vector>(v.data() + s_dim + g_dim, s_dim);
    r.success = v[expected - 2] != 0.0;
    r.task_start = v[expected - 1] != 0.0;
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

SkillDataset collect_skill_data(const Skill& skill, const CollectConfig& cfg, std::uint64_t seed) {
  SkillDataset ds;
  ds.skill = skill.id;
  if (cfg.episodes <= 0) return ds;
  const env::TaskSpec task_world = env::make_task(env::TaskId::pick_and_move, skill.task.params);
  auto rng = util::make_stream(seed, "collect");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ds.rows.reserve(static_cast<std::size_t>(cfg.episodes));
  for (int e = 0; e < cfg.episodes; ++e) {
    const bool from_task = unit(rng) < cfg.task_start_fraction;
    const std::uint64_t reset_seed = rng();
    env::WorldState start;
    env::Vec3 subgoal;
    if (from_task) {
      auto [s, task_goal] = env::reset(task_world, reset_seed);
      start = s;
      subgoal = cfg.sampler.sample(skill.id, env::observe(start), task_goal, rng);
    } else {
      std::tie(start, subgoal) = env::reset(skill.task, reset_seed);
    }
    const SkillRollout roll = execute_skill(skill, skill.task, start, subgoal);
    SkillDatasetRow row;
    row.start_state = env::observe(start);
    row.goal = subgoal;
    row.final_state = env::observe(roll.final_state);
    row.success = skill.achieved(row.final_state, row.goal);
    row.task_start = from_task;
    ds.rows.push_back(std::move(row));
  }
  return ds;
}

Standardizer Standardizer::fit(const Matrix& rows, double min_scale) {
  if (rows.rows() == 0) throw nn::InvalidInput("Standardizer::fit: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  Matrix centered = rows.rowwise() - s.mean.transpose();
  s.scale = (centered.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt().transpose();
  s.scale = s.scale.cwiseMax(min_scale);
  return s;
}

Matrix Standardizer::normalize(const Matrix& rows) const {
  if (rows.cols() != mean.size()) throw nn::InvalidInput("Standardizer::normalize: dimension mismatch");
  Matrix out = rows.rowwise() - mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

Matrix Standardizer::denormalize(const Matrix& rows) const {
  if (rows.cols() != mean.size()) throw nn::InvalidInput("Standardizer::denormalize: dimension mismatch");
  Matrix out = rows;
  out.array().rowwise() *= scale.transpose().array();
  out.rowwise() += mean.transpose();
  return out;
}

Vector Standardizer::normalize(const Vector& row) const {
  if (row.size() != mean.size()) throw nn::InvalidInput("Standardizer::normalize: dimension mismatch");
  return (row - mean).cwiseQuotient(scale);
}

Vector Standardizer::denormalize(const Vector& row) const {
  if (row.size() != mean.size()) throw nn::InvalidInput("Standardizer::denormalize: dimension mismatch");
  return row.cwiseProduct(scale) + mean;
}

void Standardizer::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_vector(prefix + "/mean", mean);
  ckpt.put_vector(prefix + "/scale", scale);
}

Standardizer Standardizer::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  Standardizer s;
  s.mean = ckpt.get_vector(prefix + "/mean");
  s.scale = ckpt.get_vector(prefix + "/scale");
  if (s.mean.size() != s.scale.size()) throw nn::CorruptCheckpoint("standardizer size mismatch '" + prefix + "'");
  return s;
}

RegressionConfig RegressionConfig::dynamics_defaults() {
  RegressionConfig c;
  c.hidden = {128, 128, 128};
  c.learning_rate = 1e-4;
  c.epochs = 200;
  return c;
}

RegressionConfig RegressionConfig::success_defaults() {
  RegressionConfig c;
  c.hidden = {50, 100};
  c.learning_rate = 1e-3;
  c.epochs = 100;
  return c;
}

void make_consistent(Vector& o) {
  if (o.size() != env::kObservationDim) return;
  for (int base : {env::kGripperPos, env::kObjectPos}) {
    for (int i = 0; i < 3; ++i) o[base + i] = std::clamp(o[base + i], 0.0, 1.0);
  }
  o[env::kAperture] = std::clamp(o[env::kAperture], 0.0, 1.0);
  o[env::kAttached] = std::clamp(o[env::kAttached], 0.0, 1.0);
  o.segment<3>(env::kRelative) = o.segment<3>(env::kObjectPos) - o.segment<3>(env::kGripperPos);
}

double position_error(const Vector& predicted, const Vector& actual) {
  if (predicted.size() != actual.size()) throw nn::InvalidInput("position_error: dimension mismatch");
  if (predicted.size() != env::kObservationDim) return (predicted - actual).norm();
  const double g = (predicted.segment<3>(env::kGripperPos) - actual.segment<3>(env::kGripperPos)).norm();
  const double o = (predicted.segment<3>(env::kObjectPos) - actual.segment<3>(env::kObjectPos)).norm();
  return 0.5 * (g + o);
}

namespace {

Matrix join(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw nn::InvalidInput("row count mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};

Split split_rows(std::size_t n, double holdout_fraction, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_hold = static_cast<std::size_t>(std::floor(holdout_fraction * static_cast<double>(n)));
  Split s;
  s.heldout.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
  s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
  return s;
}

void check_size(const SkillDataset& ds, const RegressionConfig& cfg, const char* what) {
  if (ds.size() < cfg.min_rows) {
    throw InsufficientData(std::string(what) + ": " + std::to_string(ds.size()) + " rows, need at least " +
                           std::to_string(cfg.min_rows));
  }
}

Matrix gather_inputs(const SkillDataset& ds, const std::vector<std::size_t>& idx) {
  const auto s_dim = ds.rows.front().start_state.size();
  const auto g_dim = ds.rows.front().goal.size();
  Matrix m(static_cast<Eigen::Index>(idx.size()), s_dim + g_dim);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& r = ds.rows[idx[i]];
    m.row(static_cast<Eigen::Index>(i)) << r.start_state.transpose(), r.goal.transpose();
  }
  return m;
}

Matrix gather_finals(const SkillDataset& ds, const std::vector<std::size_t>& idx) {
  Matrix m(static_cast<Eigen::Index>(idx.size()), ds.rows.front().final_state.size());
  for (std::size_t i = 0; i < idx.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = ds.rows[idx[i]].final_state;
  return m;
}

Vector gather_labels(const SkillDataset& ds, const std::vector<std::size_t>& idx) {
  Vector v(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) v[static_cast<Eigen::Index>(i)] = ds.rows[idx[i]].success ? 1.0 : 0.0;
  return v;
}

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

// Minibatch Adam over shuffled epochs. `loss_grad` fills the output gradient
// for a batch and returns the batch loss.
template <typename LossGrad>
double fit(nn::Mlp& net, const Matrix& x, const RegressionConfig& cfg, std::mt19937_64& rng, LossGrad loss_grad) {
  nn::AdamState opt(net, cfg.learning_rate);
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t end = std::min(n, start + bs);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      Matrix xb(static_cast<Eigen::Index>(idx.size()), x.cols());
      for (std::size_t i = 0; i < idx.size(); ++i) xb.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      nn::ForwardCache cache;
      const Matrix out = net.forward(xb, cache);
      Matrix grad;
      const double loss = loss_grad(out, idx, grad);
      if (!std::isfinite(loss)) throw nn::TrainingDivergence("regression loss became non-finite");
      nn::adam_step(net, net.backward(cache, grad), opt);
      sum += loss;
      ++batches;
    }
    last_epoch_loss = batches > 0 ? sum / static_cast<double>(batches) : 0.0;
  }
  return last_epoch_loss;
}

}  // namespace

Vector DynamicsModel::predict(const Vector& state, const Vector& goal) const {
  if (state.size() + goal.size() != input.mean.size()) {
    throw nn::InvalidInput("DynamicsModel::predict: dimension mismatch");
  }
  Vector in(state.size() + goal.size());
  in << state, goal;
  Vector out = output.denormalize(net.forward(input.normalize(in)));
  make_consistent(out);
  return out;
}

Matrix DynamicsModel::predict(const Matrix& states, const Matrix& goals) const {
  Matrix out = output.denormalize(net.forward(input.normalize(join(states, goals))));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    Vector row = out.row(i).transpose();
    make_consistent(row);
    out.row(i) = row.transpose();
  }
  return out;
}

void DynamicsModel::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_mlp(prefix + "/net", net);
  input.save(ckpt, prefix + "/input");
  output.save(ckpt, prefix + "/output");
}

DynamicsModel DynamicsModel::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  DynamicsModel m{ckpt.get_mlp(prefix + "/net"), Standardizer::load(ckpt, prefix + "/input"),
                  Standardizer::load(ckpt, prefix + "/output")};
  if (m.net.input_size() != m.input.mean.size() || m.net.output_size() != m.output.mean.size()) {
    throw nn::CorruptCheckpoint("dynamics model shapes disagree '" + prefix + "'");
  }
  return m;
}

// Keeps saturated sigmoids strictly inside (0,1).
constexpr double kMinProbability = 1e-12;

double SuccessModel::predict(const Vector& state, const Vector& goal) const {
  if (state.size() + goal.size() != input.mean.size()) {
    throw nn::InvalidInput("SuccessModel::predict: dimension mismatch");
  }
  Vector in(state.size() + goal.size());
  in << state, goal;
  return std::clamp(net.forward(input.normalize(in))[0], kMinProbability, 1.0 - kMinProbability);
}

Vector SuccessModel::predict(const Matrix& states, const Matrix& goals) const {
  return net.forward(input.normalize(join(states, goals))).col(0).cwiseMax(kMinProbability).cwiseMin(1.0 - kMinProbability);
}

void SuccessModel::save(nn::Checkpoint& ckpt, const std::string& prefix) const {
  ckpt.put_mlp(prefix + "/net", net);
  input.save(ckpt, prefix + "/input");
}

SuccessModel SuccessModel::load(const nn::Checkpoint& ckpt, const std::string& prefix) {
  SuccessModel m{ckpt.get_mlp(prefix + "/net"), Standardizer::load(ckpt, prefix + "/input")};
  if (m.net.input_size() != m.input.mean.size() || m.net.output_size() != 1) {
    throw nn::CorruptCheckpoint("success model shapes disagree '" + prefix + "'");
  }
  return m;
}

DynamicsModel train_dynamics(const SkillDataset& all, const RegressionConfig& cfg, std::uint64_t seed,
                             FitReport* report) {
  const SkillDataset ds = all.skill_env_rows();
  check_size(ds, cfg, "train_dynamics");
  auto rng = util::make_stream(seed, "dynamics");
  const Split split = split_rows(ds.size(), cfg.holdout_fraction, rng);
  const Matrix x_raw = gather_inputs(ds, split.train);
  const Matrix y_raw = gather_finals(ds, split.train);

  DynamicsModel m{nn::Mlp(layer_sizes(static_cast<int>(x_raw.cols()), cfg.hidden, static_cast<int>(y_raw.cols())),
                          nn::Activation::relu, nn::Activation::linear, util::derive_seed(seed, "dynamics-init")),
                  Standardizer::fit(x_raw), Standardizer::fit(y_raw)};
  const Matrix x = m.input.normalize(x_raw);
  const Matrix y = m.output.normalize(y_raw);
  const double loss = fit(m.net, x, cfg, rng, [&](const Matrix& out, const std::vector<std::size_t>& idx, Matrix& grad) {
    grad.resize(out.rows(), out.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      grad.row(static_cast<Eigen::Index>(i)) = out.row(static_cast<Eigen::Index>(i)) - y.row(static_cast<Eigen::Index>(idx[i]));
    }
    const double n = static_cast<double>(out.rows());
    const double l = grad.squaredNorm() / n;
    grad *= 2.0 / n;
    return l;
  });

  if (report != nullptr) {
    report->train_rows = split.train.size();
    report->heldout_rows = split.heldout.size();
    report->final_train_loss = loss;
    double err = 0.0;
    for (std::size_t i : split.heldout) {
      err += position_error(m.predict(ds.rows[i].start_state, ds.rows[i].goal), ds.rows[i].final_state);
    }
    report->heldout_metric = split.heldout.empty() ? 0.0 : err / static_cast<double>(split.heldout.size());
  }
  return m;
}

SuccessModel train_success(const SkillDataset& ds, const RegressionConfig& cfg, std::uint64_t seed,
                           FitReport* report) {
  check_size(ds, cfg, "train_success");
  auto rng = util::make_stream(seed, "success");
  const Split split = split_rows(ds.size(), cfg.holdout_fraction, rng);
  const Matrix x_raw = gather_inputs(ds, split.train);
  const Vector labels = gather_labels(ds, split.train);

  SuccessModel m{nn::Mlp(layer_sizes(static_cast<int>(x_raw.cols()), cfg.hidden, 1), nn::Activation::relu,
                         nn::Activation::sigmoid, util::derive_seed(seed, "success-init")),
                 Standardizer::fit(x_raw)};
  const double positives = labels.sum();
  const bool degenerate = positives == 0.0 || positives == static_cast<double>(labels.size());
  double loss = 0.0;
  if (degenerate) {
    // Constant model at the Laplace-smoothed rate.
    const double rate = (positives + 1.0) / (static_cast<double>(labels.size()) + 2.0);
    m.net = nn::Mlp(m.net.layer_sizes(), nn::Activation::relu, nn::Activation::sigmoid);
    m.net.biases().back()[0] = std::log(rate / (1.0 - rate));
    loss = -(rate * std::log(rate) + (1.0 - rate) * std::log(1.0 - rate));
  } else {
    const Matrix x = m.input.normalize(x_raw);
    loss = fit(m.net, x, cfg, rng, [&](const Matrix& out, const std::vector<std::size_t>& idx, Matrix& grad) {
      constexpr double kClamp = 1e-7;
      grad.resize(out.rows(), 1);
      const double n = static_cast<double>(out.rows());
      double l = 0.0;
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double p = std::clamp(out(i, 0), kClamp, 1.0 - kClamp);
        const double t = labels[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)])];
        l -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
        grad(i, 0) = (p - t) / (p * (1.0 - p)) / n;
      }
      return l / n;
    });
  }

  if (report != nullptr) {
    report->train_rows = split.train.size();
    report->heldout_rows = split.heldout.size();
    report->final_train_loss = loss;
    report->degenerate_labels = degenerate;
    std::size_t correct = 0;
    for (std::size_t i : split.heldout) {
      const bool pred = m.predict(ds.rows[i].start_state, ds.rows[i].goal) > 0.5;
      correct += pred == ds.rows[i].success ? 1 : 0;
    }
    report->heldout_metric =
        split.heldout.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(split.heldout.size());
  }
  return m;
}

Vector predict_successor(const DynamicsModel& m, const Vector& state, const Vector& goal) {
  return m.predict(state, goal);
}

double predict_success(const SuccessModel& m, const Vector& state, const Vector& goal) {
  return m.predict(state, goal);
}

}  // namespace herlase::skills
