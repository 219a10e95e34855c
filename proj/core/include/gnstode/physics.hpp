#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gnstode/rng.hpp"

namespace gnstode {

enum class SystemType : std::uint32_t { Gravity = 0, Coulomb = 1 };

/// Column indices into a particle feature row; charge is -1 when absent.
struct FeatureLayout {
  int dim;
  int mass;
  int charge;
  int x;
  int y;
  int vx;
  int vy;
};

FeatureLayout layout_for(SystemType system);

struct SystemSpec {
  SystemType system = SystemType::Gravity;
  double constant = 2.0;    // G for Gravity, k for Coulomb
  double dt = 0.01;         // seconds per integration step
  double softening = 0.2;   // length added in quadrature to pair distances
  double intensity = 0.42;  // particles per unit square at t = 0

  FeatureLayout layout() const { return layout_for(system); }
  int feature_dim() const { return layout().dim; }
  void validate() const;
};

/// One system snapshot: n rows of d features.
/// Gravity d=5: [m, x, y, vx, vy]; Coulomb d=6: [m, c, x, y, vx, vy].
struct ParticleState {
  int n = 0;
  int d = 0;
  std::vector<double> features;  // n*d, row-major

  double at(int particle, int feature) const { return features[particle * d + feature]; }
  double& at(int particle, int feature) { return features[particle * d + feature]; }
};

struct Trajectory {
  std::vector<ParticleState> states;
  double dt_effective = 0.01;

  int length() const { return static_cast<int>(states.size()); }
};

/// Positions uniform on a square of side sqrt(n/intensity), unit masses,
/// velocities uniform on (-1,1) per component, Coulomb charges on (0.5,1.5).
ParticleState sample_initial(int n, const SystemSpec& spec, Rng& rng);

/// Pairwise softened inverse-square accelerations, flattened [ax0, ay0, ax1, ...].
std::vector<double> acceleration(const ParticleState& state, const SystemSpec& spec);

/// One kick-drift-kick step of size spec.dt; static features copied unchanged.
ParticleState leapfrog_step(const ParticleState& state, const SystemSpec& spec);

/// Kinetic plus softened pair potential (attractive for Gravity, repulsive
/// for Coulomb).
double hamiltonian(const ParticleState& state, const SystemSpec& spec);

/// T states: the initial one plus T-1 leapfrog steps.
Trajectory simulate_trajectory(ParticleState initial, const SystemSpec& spec, int timesteps);

struct SplitCounts {
  int train = 100;
  int val = 20;
  int test = 20;
};

struct DatasetSplits {
  std::vector<Trajectory> train;
  std::vector<Trajectory> val;
  std::vector<Trajectory> test;
};

/// Each trajectory starts from a fresh sample_initial drawn on an independent
/// substream (seed + global trajectory index), so output is reproducible and
/// generation can run in parallel.
DatasetSplits generate_dataset(int n, const SystemSpec& spec, int timesteps,
                               SplitCounts counts, const Rng& rng);

/// Keep states at indices 0, stride, 2*stride, ...; scales dt_effective.
Trajectory downsample(const Trajectory& trajectory, int stride);

}  // namespace gnstode
