#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gnstode/autodiff.hpp"
#include "gnstode/graph.hpp"
#include "gnstode/ode.hpp"
#include "gnstode/physics.hpp"
#include "gnstode/rng.hpp"
#include "gnstode/tensor.hpp"

namespace gnstode {

/// Fully connected stack: tanh between layers, linear output.
struct Mlp {
  std::vector<Tensor> weights;  // each in x out
  std::vector<Tensor> biases;   // each 1 x out

  int num_layers() const { return static_cast<int>(weights.size()); }
};

/// Weights uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero.
Mlp make_mlp(int in, int hidden, int out, int hidden_layers, Rng& rng);

struct ModelConfig {
  SystemType system = SystemType::Gravity;
  int hidden_width = 64;
  int knn_k = 15;
  OdeConfig spatial_ode{OdeMethod::RK4, 2};
  OdeConfig temporal_ode{OdeMethod::RK4, 4};
  bool ablate_spatial = false;   // one skip-connected message-passing step instead
  bool ablate_temporal = false;  // plain state + dynamics addition instead

  int feature_dim() const { return layout_for(system).dim; }
  /// 1 at evolving feature columns, 0 at static ones (mass, charge).
  Tensor dynamic_mask() const;
};

/// All learnable weights plus the feature normalization statistics baked in
/// at training time. The latent width equals the feature dimension d, so the
/// four nets map:
///   message : [h_i | h_j | e_ij | l] (2d+4) -> d
///   update  : [h_i | m_i | l]        (2d+1) -> d
///   head    : h                      (d)    -> d
///   temporal: [D_t | x_t | tau]      (2d+1) -> d
struct ModelParameters {
  Mlp message_mlp;
  Mlp update_mlp;
  Mlp head_mlp;
  Mlp temporal_mlp;
  Tensor norm_mean;  // 1 x d
  Tensor norm_std;   // 1 x d, floored away from zero

  std::vector<std::pair<std::string, Tensor*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> named_tensors() const;
};

ModelParameters init_parameters(const ModelConfig& config, Rng& rng);

/// Per-feature mean/std over every state of the given trajectories, written
/// into params. Stds are floored at 1e-8 so constant features stay harmless.
void fit_normalization(ModelParameters& params, std::span<const Trajectory> trajectories);

/// Model weights bound to a tape as parameter leaves, ready for a forward
/// pass. Normalization rows are bound as constants.
struct BoundModel {
  const ModelConfig* config = nullptr;
  struct BoundMlp {
    std::vector<Var> weights;
    std::vector<Var> biases;
  };
  BoundMlp message, update, head, temporal;
  Var mean_row, std_row, inv_std_row, mask_row;
  Tape* tape = nullptr;
};

BoundModel bind_model(Tape& tape, const ModelParameters& params, const ModelConfig& config);

Var mlp_forward(const BoundModel::BoundMlp& mlp, Var x);

/// dH/dl at layer coordinate l: per-edge messages from [h_i|h_j|e|l], summed
/// into receivers, then the per-node update on [h_i|m_i|l].
Var gin_derivative(const BoundModel& model, Var h, const SpatialGraph& graph, double l);

/// H_L from normalized features h0: integrate the message-passing derivative
/// over l in [0,1], or a single skip-connection step when spatially ablated.
Var spatial_ode_solve(const BoundModel& model, Var h0, const SpatialGraph& graph);

/// Raw-scale temporal dynamics D_t: head output with static columns zeroed,
/// scaled back by the feature stds.
Var dynamics_head(const BoundModel& model, Var h_final);

/// D_tau = D_t + tau * g([D_t | x_t | tau]); exactly D_t at tau = 0.
Var temporal_dynamics_fn(const BoundModel& model, Var d_t, Var x_norm, double tau);

/// Full one-step prediction on an existing tape; the graph must come from
/// the same state.
Var predict_on_tape(const BoundModel& model, const ParticleState& state,
                    const SpatialGraph& graph);

/// One simulator step X_t -> X_{t+1}: builds the k-NN graph, runs both ODE
/// components on a fresh tape and copies static features through bit-exactly.
ParticleState predict_step(const ParticleState& state, const ModelParameters& params,
                           const ModelConfig& config);

/// Spec-shaped convenience wrapper over temporal_dynamics_fn for a raw-scale
/// dynamics tensor and state; validates tau in [0,1].
Tensor temporal_dynamics(const Tensor& d_t, const ParticleState& state, double tau,
                         const ModelParameters& params, const ModelConfig& config);

Tensor state_to_tensor(const ParticleState& state);
ParticleState tensor_to_state(const Tensor& tensor, const ParticleState& like);

}  // namespace gnstode
