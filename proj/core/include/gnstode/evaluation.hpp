#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gnstode/model.hpp"
#include "gnstode/physics.hpp"

namespace gnstode {

struct RolloutResult {
  Trajectory trajectory;
  bool diverged = false;
  int divergence_step = -1;  // time stamp at which the state went non-finite
};

/// Closed-loop simulation: T states starting from x1, each prediction fed
/// back as the next input with the graph rebuilt from predicted coordinates.
/// A non-finite prediction truncates the trajectory and sets the flag.
RolloutResult rollout(const ParticleState& x1, const ModelParameters& params,
                      const ModelConfig& config, int timesteps, double dt_effective);

/// sqrt( (1/N) sum_i sum_{t=2}^{T} ||X^c_{i,t} - Xhat^c_{i,t}||_F^2 ) over the
/// coordinate columns. Predicted trajectories may be truncated prefixes.
double rmse(std::span<const Trajectory> predicted, std::span<const Trajectory> truth,
            SystemType system);

/// (1/N) sum_i |H_{i,1} - Hhat_{i,T}| / |H_{i,1}| with H from the ground truth
/// initial state and Hhat from the predicted final state.
double energy_error(std::span<const Trajectory> predicted,
                    std::span<const Trajectory> truth, const SystemSpec& spec);

/// Reference predictor: coordinates drift at the initial velocities,
/// velocities and static features frozen.
Trajectory constant_velocity_baseline(const ParticleState& x1, int timesteps,
                                      double dt_effective);

struct TrajectoryEval {
  double sq_coord_error = 0.0;  // sum over t of ||X^c - Xhat^c||_F^2
  double rmse = 0.0;            // sqrt of the above
  double energy_error = 0.0;
  bool diverged = false;
  int divergence_step = -1;
};

struct EvalReport {
  // dataset echo
  SystemType system = SystemType::Gravity;
  int n = 0;
  int d = 0;
  int timesteps = 0;
  int num_trajectories = 0;
  double dt_effective = 0.0;
  double constant = 0.0;
  double intensity = 0.0;
  double softening = 0.0;
  bool ablate_spatial = false;
  bool ablate_temporal = false;

  double rmse = 0.0;
  double energy_error = 0.0;
  double baseline_rmse = 0.0;
  std::vector<TrajectoryEval> per_trajectory;
};

/// Rolls the model out over every test trajectory (in parallel, read-only
/// parameters) and aggregates both metrics plus the baseline comparison.
EvalReport evaluate(std::span<const Trajectory> test, const ModelParameters& params,
                    const ModelConfig& config, const SystemSpec& spec);

std::string report_to_json(const EvalReport& report);

/// One row per particle per time stamp: label,t,particle,features...
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          SystemType system, const std::string& label,
                          bool header = true);

}  // namespace gnstode
