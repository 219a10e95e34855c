#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gnstode/model.hpp"
#include "gnstode/physics.hpp"
#include "gnstode/training.hpp"

namespace gnstode {

/// Dataset file, magic "GNSTDS01". Little-endian header:
///   u32 system (0 gravity, 1 coulomb), u32 n, u32 d, u32 T, u32 n_traj,
///   f64 dt_effective, f64 constant, f64 intensity, f64 softening
/// followed by an f64 payload [n_traj][T][n][d], row-major. Total size is
/// 60 + 8 * n_traj * T * n * d bytes.
struct LoadedDataset {
  SystemSpec spec;  // dt holds dt_effective
  std::vector<Trajectory> trajectories;

  int n() const { return trajectories.empty() ? 0 : trajectories[0].states[0].n; }
  int d() const { return trajectories.empty() ? 0 : trajectories[0].states[0].d; }
};

void write_dataset(const std::filesystem::path& path, const SystemSpec& spec,
                   std::span<const Trajectory> trajectories);
LoadedDataset read_dataset(const std::filesystem::path& path);

/// Checkpoint file, magic "GNSTCK01": u32 JSON length + UTF-8 JSON carrying
/// the model/training configuration, normalization statistics and seed, then
/// u32 tensor count and per tensor u16 name length, name, u8 ndim, u32 dims,
/// f64 data, everything little-endian.
struct Checkpoint {
  ModelConfig model;
  TrainingConfig training;  // training.model mirrors `model`
  ModelParameters params;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// CSV with one row per epoch: epoch,train_loss,val_loss.
void write_training_log(const std::filesystem::path& path, const TrainRecord& record);

}  // namespace gnstode
