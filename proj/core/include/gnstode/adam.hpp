#pragma once

#include <cstdint>
#include <vector>

#include "gnstode/tensor.hpp"

namespace gnstode {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second-moment accumulators for one flat list of parameter tensors.
class AdamState {
 public:
  AdamState(const std::vector<Tensor>& params, AdamConfig config);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  friend void adam_step(std::vector<Tensor>&, const std::vector<Tensor>&, AdamState&);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

/// One bias-corrected Adam update, in place.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               AdamState& state);

}  // namespace gnstode
