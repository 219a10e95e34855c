#include "gnstode/training.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "gnstode/adam.hpp"
#include "gnstode/graph.hpp"
#include "gnstode/parallel.hpp"

namespace gnstode {

std::vector<StatePair> make_pairs(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("make_pairs: no trajectories");
  std::vector<StatePair> pairs;
  for (const Trajectory& traj : trajectories) {
    if (traj.length() < 2) {
      throw std::invalid_argument("make_pairs: trajectory shorter than 2 states");
    }
    for (std::size_t t = 0; t + 1 < traj.states.size(); ++t) {
      pairs.push_back({&traj.states[t], &traj.states[t + 1]});
    }
  }
  return pairs;
}

double step_loss(const ParticleState& predicted, const ParticleState& truth,
                 std::span<const double> inv_std) {
  if (predicted.n != truth.n || predicted.d != truth.d) {
    throw std::invalid_argument("step_loss: shape mismatch " + std::to_string(predicted.n) +
                                "x" + std::to_string(predicted.d) + " vs " +
                                std::to_string(truth.n) + "x" + std::to_string(truth.d));
  }
  if (!inv_std.empty() && inv_std.size() != static_cast<std::size_t>(predicted.d)) {
    throw std::invalid_argument("step_loss: inv_std has wrong length");
  }
  double loss = 0.0;
  for (int i = 0; i < predicted.n; ++i) {
    for (int f = 0; f < predicted.d; ++f) {
      double diff = predicted.at(i, f) - truth.at(i, f);
      if (!inv_std.empty()) diff *= inv_std[f];
      loss += diff * diff;
    }
  }
  return loss;
}

namespace {

struct PairGradients {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

// Forward + backward for one training pair on its own tape.
PairGradients pair_gradients(const StatePair& pair, const ModelParameters& params,
                             const ModelConfig& config) {
  const SpatialGraph graph = knn_graph(*pair.current, config.knn_k);
  Tape tape;
  BoundModel model = bind_model(tape, params, config);

  Var prediction = predict_on_tape(model, *pair.current, graph);
  Var truth = tape.constant(state_to_tensor(*pair.next));
  Var diff = tape.mul(tape.sub(prediction, truth),
                      tape.broadcast_row(model.inv_std_row, pair.current->n));
  Var loss = tape.sum_all(tape.mul(diff, diff));

  PairGradients out;
  out.loss = tape.value(loss).item();
  Gradients grads = tape.backward(loss);
  auto collect = [&](const BoundModel::BoundMlp& mlp) {
    for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
      out.grads.push_back(grads.at(mlp.weights[i]));
      out.grads.push_back(grads.at(mlp.biases[i]));
    }
  };
  collect(model.message);
  collect(model.update);
  collect(model.head);
  collect(model.temporal);
  return out;
}

double validation_loss(std::span<const StatePair> pairs, const ModelParameters& params,
                       const ModelConfig& config, std::span<const double> inv_std) {
  std::vector<double> losses(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    ParticleState predicted = predict_step(*pairs[i].current, params, config);
    losses[i] = step_loss(predicted, *pairs[i].next, inv_std);
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(pairs.size());
}

}  // namespace

TrainResult train(std::span<const Trajectory> train_trajs,
                  std::span<const Trajectory> val_trajs, const TrainingConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("train: learning_rate must be positive");
  }
  std::vector<StatePair> pairs = make_pairs(train_trajs);
  std::vector<StatePair> val_pairs = make_pairs(val_trajs);
  const int d = pairs[0].current->d;
  if (d != config.model.feature_dim()) {
    throw std::invalid_argument("train: dataset dimension " + std::to_string(d) +
                                " does not match the configured system");
  }

  Rng rng(config.seed);
  ModelParameters params = init_parameters(config.model, rng);
  fit_normalization(params, train_trajs);
  std::vector<double> inv_std(d);
  for (int f = 0; f < d; ++f) inv_std[f] = 1.0 / params.norm_std(0, f);

  auto named = params.named_tensors();
  std::vector<Tensor> flat;
  flat.reserve(named.size());
  for (auto& [name, tensor] : named) flat.push_back(*tensor);
  AdamState adam(flat, AdamConfig{.learning_rate = config.learning_rate});
  auto push_back_params = [&] {
    for (std::size_t i = 0; i < named.size(); ++i) *named[i].second = flat[i];
  };

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.record.best_epoch = -1;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<PairGradients> batch_grads;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates on the shared stream keeps runs bit-reproducible
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = rng.next_u64() % i;
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::size_t batch_n = stop - start;
      batch_grads.assign(batch_n, {});
      parallel_for(batch_n, [&](std::size_t b) {
        batch_grads[b] = pair_gradients(pairs[order[start + b]], params, config.model);
      });

      std::vector<Tensor> total(flat.size());
      for (std::size_t i = 0; i < flat.size(); ++i) total[i] = Tensor::zeros_like(flat[i]);
      double batch_loss = 0.0;
      for (const PairGradients& pg : batch_grads) {
        batch_loss += pg.loss;
        for (std::size_t i = 0; i < total.size(); ++i) {
          auto dst = total[i].data();
          auto src = pg.grads[i].data();
          for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch + 1) + ", batch " +
                                 std::to_string(start / config.batch_size + 1));
      }
      epoch_loss += batch_loss;

      const double scale = 1.0 / static_cast<double>(batch_n);
      double sq_norm = 0.0;
      for (Tensor& g : total) {
        for (double& v : g.data()) {
          v *= scale;
          sq_norm += v * v;
        }
      }
      if (config.grad_clip > 0.0) {
        const double norm = std::sqrt(sq_norm);
        if (norm > config.grad_clip) {
          const double shrink = config.grad_clip / norm;
          for (Tensor& g : total) {
            for (double& v : g.data()) v *= shrink;
          }
        }
      }
      adam_step(flat, total, adam);
      push_back_params();
    }

    EpochRecord record;
    record.train_loss = epoch_loss / static_cast<double>(pairs.size());
    record.val_loss = validation_loss(val_pairs, params, config.model, inv_std);
    if (!std::isfinite(record.val_loss)) {
      throw std::runtime_error("train: non-finite validation loss at epoch " +
                               std::to_string(epoch + 1));
    }
    result.record.epochs.push_back(record);
    if (record.val_loss < best_val) {
      best_val = record.val_loss;
      result.record.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

}  // namespace gnstode
