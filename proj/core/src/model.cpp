#include "gnstode/model.hpp"

#include <cmath>
#include <stdexcept>

namespace gnstode {

Mlp make_mlp(int in, int hidden, int out, int hidden_layers, Rng& rng) {
  if (in < 1 || hidden < 1 || out < 1 || hidden_layers < 0) {
    throw std::invalid_argument("make_mlp: bad dimensions");
  }
  std::vector<int> dims;
  dims.push_back(in);
  for (int i = 0; i < hidden_layers; ++i) dims.push_back(hidden);
  dims.push_back(out);

  Mlp mlp;
  for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
    const int fan_in = dims[layer], fan_out = dims[layer + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w(fan_in, fan_out);
    for (double& v : w.data()) v = rng.uniform(-bound, bound);
    mlp.weights.push_back(std::move(w));
    mlp.biases.push_back(Tensor(1, fan_out));
  }
  return mlp;
}

Tensor ModelConfig::dynamic_mask() const {
  const FeatureLayout lay = layout_for(system);
  Tensor mask = Tensor::full(1, lay.dim, 1.0);
  mask(0, lay.mass) = 0.0;
  if (lay.charge >= 0) mask(0, lay.charge) = 0.0;
  return mask;
}

namespace {

void collect(const char* prefix, Mlp& mlp,
             std::vector<std::pair<std::string, Tensor*>>& out) {
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    out.emplace_back(std::string(prefix) + ".w" + std::to_string(i), &mlp.weights[i]);
    out.emplace_back(std::string(prefix) + ".b" + std::to_string(i), &mlp.biases[i]);
  }
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> ModelParameters::named_tensors() {
  std::vector<std::pair<std::string, Tensor*>> out;
  collect("message", message_mlp, out);
  collect("update", update_mlp, out);
  collect("head", head_mlp, out);
  collect("temporal", temporal_mlp, out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParameters::named_tensors() const {
  auto mutable_view = const_cast<ModelParameters*>(this)->named_tensors();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mutable_view.size());
  for (auto& [name, tensor] : mutable_view) out.emplace_back(name, tensor);
  return out;
}

ModelParameters init_parameters(const ModelConfig& config, Rng& rng) {
  const int d = config.feature_dim();
  const int w = config.hidden_width;
  ModelParameters params;
  params.message_mlp = make_mlp(2 * d + 4, w, d, 2, rng);
  params.update_mlp = make_mlp(2 * d + 1, w, d, 2, rng);
  params.head_mlp = make_mlp(d, w, d, 2, rng);
  params.temporal_mlp = make_mlp(2 * d + 1, w, d, 2, rng);
  params.norm_mean = Tensor(1, d);
  params.norm_std = Tensor::full(1, d, 1.0);
  return params;
}

void fit_normalization(ModelParameters& params, std::span<const Trajectory> trajectories) {
  if (trajectories.empty() || trajectories[0].states.empty()) {
    throw std::invalid_argument("fit_normalization: no states");
  }
  const int d = trajectories[0].states[0].d;
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  std::size_t count = 0;
  for (const Trajectory& traj : trajectories) {
    for (const ParticleState& state : traj.states) {
      for (int i = 0; i < state.n; ++i) {
        for (int f = 0; f < d; ++f) {
          mean[f] += state.at(i, f);
          sq[f] += state.at(i, f) * state.at(i, f);
        }
      }
      count += state.n;
    }
  }
  params.norm_mean = Tensor(1, d);
  params.norm_std = Tensor(1, d);
  for (int f = 0; f < d; ++f) {
    const double m = mean[f] / count;
    const double var = std::max(0.0, sq[f] / count - m * m);
    params.norm_mean(0, f) = m;
    params.norm_std(0, f) = std::max(std::sqrt(var), 1e-8);
  }
}

namespace {

BoundModel::BoundMlp bind_mlp(Tape& tape, const Mlp& mlp) {
  BoundModel::BoundMlp bound;
  for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
    bound.weights.push_back(tape.leaf(mlp.weights[i], /*parameter=*/true));
    bound.biases.push_back(tape.leaf(mlp.biases[i], /*parameter=*/true));
  }
  return bound;
}

}  // namespace

BoundModel bind_model(Tape& tape, const ModelParameters& params, const ModelConfig& config) {
  BoundModel bound;
  bound.config = &config;
  bound.tape = &tape;
  bound.message = bind_mlp(tape, params.message_mlp);
  bound.update = bind_mlp(tape, params.update_mlp);
  bound.head = bind_mlp(tape, params.head_mlp);
  bound.temporal = bind_mlp(tape, params.temporal_mlp);
  bound.mean_row = tape.constant(params.norm_mean);
  bound.std_row = tape.constant(params.norm_std);
  Tensor inv_std = params.norm_std;
  for (double& v : inv_std.data()) v = 1.0 / v;
  bound.inv_std_row = tape.constant(std::move(inv_std));
  bound.mask_row = tape.constant(config.dynamic_mask());
  return bound;
}

Var mlp_forward(const BoundModel::BoundMlp& mlp, Var x) {
  Tape& tape = *x.tape;
  Var h = x;
  const std::size_t layers = mlp.weights.size();
  for (std::size_t i = 0; i < layers; ++i) {
    const std::size_t rows = tape.value(h).rows();
    h = tape.add(tape.matmul(h, mlp.weights[i]), tape.broadcast_row(mlp.biases[i], rows));
    if (i + 1 < layers) h = tape.tanh(h);
  }
  return h;
}

Var gin_derivative(const BoundModel& model, Var h, const SpatialGraph& graph, double l) {
  Tape& tape = *model.tape;
  const Tensor& hv = tape.value(h);
  if (hv.rows() != static_cast<std::size_t>(graph.n)) {
    throw std::invalid_argument("gin_derivative: state has " +
                                std::to_string(hv.rows()) + " rows, graph has " +
                                std::to_string(graph.n) + " nodes");
  }
  const std::size_t n = hv.rows();
  const std::size_t num_edges = graph.num_edges();

  Var aggregated;
  if (num_edges > 0) {
    Var h_recv = tape.gather_rows(h, graph.receivers);
    Var h_send = tape.gather_rows(h, graph.senders);
    Var edge_feat = tape.constant(Tensor(num_edges, 3, graph.edge_features));
    Var l_edges = tape.constant(Tensor::full(num_edges, 1, l));
    Var message_in = tape.concat(1, {h_recv, h_send, edge_feat, l_edges});
    Var messages = mlp_forward(model.message, message_in);
    aggregated = tape.segment_sum(messages, graph.receivers, n);
  } else {
    aggregated = tape.constant(Tensor(n, hv.cols()));
  }

  Var l_nodes = tape.constant(Tensor::full(n, 1, l));
  Var update_in = tape.concat(1, {h, aggregated, l_nodes});
  return mlp_forward(model.update, update_in);
}

Var spatial_ode_solve(const BoundModel& model, Var h0, const SpatialGraph& graph) {
  Tape& tape = *model.tape;
  if (model.config->ablate_spatial) {
    return tape.add(h0, gin_derivative(model, h0, graph, 0.0));
  }
  OdeRhs rhs = [&](Var h, double l) { return gin_derivative(model, h, graph, l); };
  return integrate(rhs, h0, 0.0, 1.0, model.config->spatial_ode);
}

Var dynamics_head(const BoundModel& model, Var h_final) {
  Tape& tape = *model.tape;
  const std::size_t n = tape.value(h_final).rows();
  Var d_norm = tape.mul(mlp_forward(model.head, h_final),
                        tape.broadcast_row(model.mask_row, n));
  return tape.mul(d_norm, tape.broadcast_row(model.std_row, n));
}

Var temporal_dynamics_fn(const BoundModel& model, Var d_t, Var x_norm, double tau) {
  if (tau < 0.0 || tau > 1.0) {
    throw std::invalid_argument("temporal_dynamics_fn: tau " + std::to_string(tau) +
                                " outside [0,1]");
  }
  Tape& tape = *model.tape;
  const std::size_t n = tape.value(d_t).rows();
  Var d_norm = tape.mul(d_t, tape.broadcast_row(model.inv_std_row, n));
  Var tau_col = tape.constant(Tensor::full(n, 1, tau));
  Var g_in = tape.concat(1, {d_norm, x_norm, tau_col});
  Var correction = tape.mul(mlp_forward(model.temporal, g_in),
                            tape.broadcast_row(model.mask_row, n));
  correction = tape.mul(correction, tape.broadcast_row(model.std_row, n));
  return tape.add(d_t, tape.scalar_mul(correction, tau));
}

Var predict_on_tape(const BoundModel& model, const ParticleState& state,
                    const SpatialGraph& graph) {
  Tape& tape = *model.tape;
  const std::size_t n = state.n;

  Var x_t = tape.constant(state_to_tensor(state));
  Var x_norm = tape.mul(tape.sub(x_t, tape.broadcast_row(model.mean_row, n)),
                        tape.broadcast_row(model.inv_std_row, n));

  Var h_final = spatial_ode_solve(model, x_norm, graph);
  Var d_t = dynamics_head(model, h_final);

  if (model.config->ablate_temporal) {
    return tape.add(x_t, d_t);
  }
  OdeRhs rhs = [&](Var, double tau) { return temporal_dynamics_fn(model, d_t, x_norm, tau); };
  return integrate(rhs, x_t, 0.0, 1.0, model.config->temporal_ode);
}

ParticleState predict_step(const ParticleState& state, const ModelParameters& params,
                           const ModelConfig& config) {
  if (state.d != config.feature_dim()) {
    throw std::invalid_argument("predict_step: state dimension " + std::to_string(state.d) +
                                " does not match system");
  }
  const SpatialGraph graph = knn_graph(state, config.knn_k);
  Tape tape;
  BoundModel model = bind_model(tape, params, config);
  Var prediction = predict_on_tape(model, state, graph);
  const Tensor& value = tape.value(prediction);
  if (!value.all_finite()) {
    throw std::runtime_error("predict_step: non-finite prediction");
  }
  return tensor_to_state(value, state);
}

Tensor temporal_dynamics(const Tensor& d_t, const ParticleState& state, double tau,
                         const ModelParameters& params, const ModelConfig& config) {
  Tape tape;
  BoundModel model = bind_model(tape, params, config);
  const std::size_t n = state.n;
  Var x_t = tape.constant(state_to_tensor(state));
  Var x_norm = tape.mul(tape.sub(x_t, tape.broadcast_row(model.mean_row, n)),
                        tape.broadcast_row(model.inv_std_row, n));
  Var d_var = tape.constant(d_t);
  Var out = temporal_dynamics_fn(model, d_var, x_norm, tau);
  return tape.value(out);
}

Tensor state_to_tensor(const ParticleState& state) {
  return Tensor(state.n, state.d, state.features);
}

ParticleState tensor_to_state(const Tensor& tensor, const ParticleState& like) {
  ParticleState out = like;
  std::copy(tensor.data().begin(), tensor.data().end(), out.features.begin());
  // static features are the input's, bit for bit
  const FeatureLayout lay =
      layout_for(like.d == 5 ? SystemType::Gravity : SystemType::Coulomb);
  for (int i = 0; i < like.n; ++i) {
    out.at(i, lay.mass) = like.at(i, lay.mass);
    if (lay.charge >= 0) out.at(i, lay.charge) = like.at(i, lay.charge);
  }
  return out;
}

}  // namespace gnstode
