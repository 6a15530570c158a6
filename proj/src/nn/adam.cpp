#include "herlase/nn/adam.hpp"

#include <cmath>

namespace herlase::nn {

AdamState::AdamState(const Mlp& net, double lr) : learning_rate(lr) {
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    const auto& w = net.weights()[l];
    first_weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    second_weights.push_back(Matrix::Zero(w.rows(), w.cols()));
    first_biases.push_back(Vector::Zero(net.biases()[l].size()));
    second_biases.push_back(Vector::Zero(net.biases()[l].size()));
  }
}

namespace {

template <typename P>
void update_block(P& param, const P& grad, P& m, P& v, const AdamState& s, double bc1, double bc2) {
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double step = s.learning_rate / bc1;
  param.array() -= step * m.array() / ((v.array() / bc2).sqrt() + s.eps_hat);
}

}  // namespace

void adam_step(Mlp& net, const MlpGradients& grads, AdamState& state) {
  if (grads.weights.size() != net.weights().size() ||
      state.first_weights.size() != net.weights().size()) {
    throw InvalidInput("adam_step: gradient/state layer count mismatch");
  }
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    if (grads.weights[l].rows() != net.weights()[l].rows() ||
        grads.weights[l].cols() != net.weights()[l].cols() ||
        grads.biases[l].size() != net.biases()[l].size()) {
      throw InvalidInput("adam_step: gradient shape mismatch in layer " + std::to_string(l));
    }
  }
  if (!grads.all_finite()) throw TrainingDivergence("adam_step: non-finite gradient");

  ++state.step_count;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t l = 0; l < net.weights().size(); ++l) {
    update_block(net.weights()[l], grads.weights[l], state.first_weights[l], state.second_weights[l],
                 state, bc1, bc2);
    update_block(net.biases()[l], grads.biases[l], state.first_biases[l], state.second_biases[l],
                 state, bc1, bc2);
  }
}

}  // namespace herlase::nn
