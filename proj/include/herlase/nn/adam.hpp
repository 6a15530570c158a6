#pragma once

#include "herlase/nn/mlp.hpp"

namespace herlase::nn {

struct AdamState {
  long step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  std::vector<Matrix> first_weights, second_weights;
  std::vector<Vector> first_biases, second_biases;

  AdamState() = default;
  AdamState(const Mlp& net, double lr);
};

/// One bias-corrected Adam update. Throws TrainingDivergence on a non-finite
/// gradient and leaves both the network and the state untouched in that case.
void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state);

}  // namespace herlase::nn
