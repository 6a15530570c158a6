#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace herlase::nn {

/// Row-major dense matrix; batches are laid out one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { linear, relu, tanh, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gradients of a scalar loss with respect to every parameter of an Mlp and
/// with respect to its input batch.
struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  Matrix input;

  void scale(double factor);
  void add(const MlpGradients& other);
  bool all_finite() const;
};

/// Activations recorded during a forward pass, consumed by backward().
struct ForwardCache {
  std::vector<Matrix> activations;  // activations[0] is the input batch
};

/// Fully connected feed-forward network. Weight i has shape
/// (layer_sizes[i+1], layer_sizes[i]); the hidden activation is applied after
/// every layer except the last, which uses the output activation.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output);
  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  Mlp(std::vector<int> layer_sizes, Activation hidden, Activation output, std::uint64_t seed);

  Vector forward(const Vector& input) const;
  Matrix forward(const Matrix& batch) const;
  Matrix forward(const Matrix& batch, ForwardCache& cache) const;

  /// Reverse-mode gradients given dLoss/dOutput for every sample in the batch.
  /// Parameter gradients are summed over the batch.
  MlpGradients backward(const ForwardCache& cache, const Matrix& output_gradient) const;
  MlpGradients backward(const Matrix& batch, const Matrix& output_gradient) const;
  MlpGradients backward(const Vector& input, const Vector& output_gradient) const;

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  std::size_t parameter_count() const;

  std::vector<Matrix>& weights() { return weights_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Vector>& biases() const { return biases_; }

  MlpGradients zero_gradients() const;
  bool same_shape(const Mlp& other) const;

 private:
  Activation activation_for(std::size_t layer) const;

  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
  Activation hidden_ = Activation::relu;
  Activation output_ = Activation::linear;
};

/// target <- tau * target + (1 - tau) * online
void polyak_update(Mlp& target, const Mlp& online, double tau);

}  // namespace herlase::nn
