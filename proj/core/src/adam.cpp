#include "gnstode/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gnstode {

AdamState::AdamState(const std::vector<Tensor>& params, AdamConfig config)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor& p : params) {
    m_.push_back(Tensor::zeros_like(p));
    v_.push_back(Tensor::zeros_like(p));
  }
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m_.size()) {
    throw std::invalid_argument("adam_step: " + std::to_string(params.size()) +
                                " params vs " + std::to_string(grads.size()) +
                                " grads vs state of " + std::to_string(state.m_.size()));
  }
  const AdamConfig& c = state.config_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i])) {
      throw std::invalid_argument("adam_step: shape mismatch at tensor " +
                                  std::to_string(i) + ": " + params[i].shape_str() +
                                  " vs " + grads[i].shape_str());
    }
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.m_[i].data();
    auto v = state.v_[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace gnstode
