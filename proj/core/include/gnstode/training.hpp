#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gnstode/model.hpp"
#include "gnstode/physics.hpp"

namespace gnstode {

/// One teacher-forcing sample: consecutive states of some trajectory.
struct StatePair {
  const ParticleState* current = nullptr;
  const ParticleState* next = nullptr;
};

/// All consecutive pairs from all trajectories, trajectory order preserved.
std::vector<StatePair> make_pairs(std::span<const Trajectory> trajectories);

/// Squared Frobenius norm of the prediction error on normalized features.
/// An empty inv_std means unit scale.
double step_loss(const ParticleState& predicted, const ParticleState& truth,
                 std::span<const double> inv_std = {});

struct TrainingConfig {
  int epochs = 200;
  int batch_size = 50;
  double learning_rate = 1e-3;
  double grad_clip = 10.0;  // global norm; <= 0 disables
  std::uint64_t seed = 0;
  ModelConfig model;
};

struct EpochRecord {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // 0-based index of the minimal validation loss
};

struct TrainResult {
  ModelParameters params;  // snapshot from the best epoch
  TrainRecord record;
};

/// One-step reconstruction training: per epoch, shuffle all pairs, take Adam
/// steps on batch-averaged gradients, then score the validation pairs.
/// Fully deterministic for a fixed seed. Throws on non-finite losses.
TrainResult train(std::span<const Trajectory> train_trajs,
                  std::span<const Trajectory> val_trajs, const TrainingConfig& config);

}  // namespace gnstode
