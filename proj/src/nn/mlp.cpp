#include "herlase/nn/mlp.hpp"

#include <cmath>
#include <random>

namespace herlase::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw InvalidInput("unknown activation '" + name + "'");
}

namespace {

void apply(Activation a, Matrix& z) {
  switch (a) {
    case Activation::linear: break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::sigmoid: z = (1.0 / (1.0 + (-z.array()).exp())).matrix(); break;
  }
}

// Multiplies the upstream gradient by the activation derivative, expressed in
// terms of the activation output.
void apply_derivative(Activation a, const Matrix& out, Matrix& grad) {
  switch (a) {
    case Activation::linear: break;
    case Activation::relu: grad = (out.array() > 0.0).select(grad.array(), 0.0).matrix(); break;
    case Activation::tanh: grad.array() *= 1.0 - out.array().square(); break;
    case Activation::sigmoid: grad.array() *= out.array() * (1.0 - out.array()); break;
  }
}

}  // namespace

void MlpGradients::scale(double factor) {
  for (auto& w : weights) w *= factor;
  for (auto& b : biases) b *= factor;
  input *= factor;
}

void MlpGradients::add(const MlpGradients& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
}

bool MlpGradients::all_finite() const {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
  }
  return true;
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output)
    : sizes_(std::move(layer_sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw InvalidInput("an Mlp needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw InvalidInput("layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    weights_.push_back(Matrix::Zero(sizes_[i + 1], sizes_[i]));
    biases_.push_back(Vector::Zero(sizes_[i + 1]));
  }
}

Mlp::Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output, std::uint64_t seed)
    : Mlp(std::move(layer_sizes), hidden, output) {
  std::mt19937_64 rng(seed);
  for (auto& w : weights_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
  }
}

Activation Mlp::activation_for(std::size_t layer) const {
  return layer + 1 == weights_.size() ? output_ : hidden_;
}

Vector Mlp::forward(const Vector& input) const {
  if (input.size() != input_size()) {
    throw InvalidInput("forward: expected input of length " + std::to_string(input_size()) +
                       ", got " + std::to_string(input.size()));
  }
  Matrix batch = input.transpose();
  return forward(batch).row(0).transpose();
}

Matrix Mlp::forward(const Matrix& batch) const {
  if (batch.cols() != input_size()) {
    throw InvalidInput("forward: expected " + std::to_string(input_size()) + " input columns, got " +
                       std::to_string(batch.cols()));
  }
  Matrix a = batch;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    apply(activation_for(l), z);
    a = std::move(z);
  }
  return a;
}

Matrix Mlp::forward(const Matrix& batch, ForwardCache& cache) const {
  if (batch.cols() != input_size()) {
    throw InvalidInput("forward: expected " + std::to_string(input_size()) + " input columns, got " +
                       std::to_string(batch.cols()));
  }
  cache.activations.clear();
  cache.activations.reserve(weights_.size() + 1);
  cache.activations.push_back(batch);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = cache.activations.back() * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    apply(activation_for(l), z);
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

MlpGradients Mlp::backward(const ForwardCache& cache, const Matrix& output_gradient) const {
  if (cache.activations.size() != weights_.size() + 1) {
    throw InvalidInput("backward: forward cache does not belong to this network");
  }
  const Matrix& out = cache.activations.back();
  if (output_gradient.rows() != out.rows() || output_gradient.cols() != out.cols()) {
    throw InvalidInput("backward: output gradient shape mismatch");
  }
  MlpGradients g;
  g.weights.resize(weights_.size());
  g.biases.resize(weights_.size());
  Matrix delta = output_gradient;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    apply_derivative(activation_for(l), cache.activations[l + 1], delta);
    g.weights[l] = delta.transpose() * cache.activations[l];
    g.biases[l] = delta.colwise().sum().transpose();
    delta = delta * weights_[l];
  }
  g.input = std::move(delta);
  return g;
}

MlpGradients Mlp::backward(const Matrix& batch, const Matrix& output_gradient) const {
  ForwardCache cache;
  forward(batch, cache);
  return backward(cache, output_gradient);
}

MlpGradients Mlp::backward(const Vector& input, const Vector& output_gradient) const {
  if (input.size() != input_size() || output_gradient.size() != output_size()) {
    throw InvalidInput("backward: dimension mismatch");
  }
  Matrix x = input.transpose();
  Matrix dy = output_gradient.transpose();
  return backward(x, dy);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

bool Mlp::same_shape(const Mlp& other) const { return sizes_ == other.sizes_; }

void polyak_update(Mlp& target, const Mlp& online, double tau) {
  if (!target.same_shape(online)) throw InvalidInput("polyak_update: shape mismatch");
  for (std::size_t l = 0; l < target.weights().size(); ++l) {
    target.weights()[l] = tau * target.weights()[l] + (1.0 - tau) * online.weights()[l];
    target.biases()[l] = tau * target.biases()[l] + (1.0 - tau) * online.biases()[l];
  }
}

}  // namespace herlase::nn
