#include "gnstode/physics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gnstode/parallel.hpp"

namespace gnstode {

FeatureLayout layout_for(SystemType system) {
  if (system == SystemType::Gravity) {
    return FeatureLayout{5, 0, -1, 1, 2, 3, 4};
  }
  return FeatureLayout{6, 0, 1, 2, 3, 4, 5};
}

void SystemSpec::validate() const {
  if (dt <= 0.0) throw std::invalid_argument("SystemSpec: dt must be positive");
  if (intensity <= 0.0) throw std::invalid_argument("SystemSpec: intensity must be positive");
  if (softening < 0.0) throw std::invalid_argument("SystemSpec: softening must be >= 0");
}

namespace {

void check_state(const ParticleState& state, const SystemSpec& spec, const char* who) {
  if (state.d != spec.feature_dim()) {
    throw std::invalid_argument(std::string(who) + ": state has " +
                                std::to_string(state.d) + " features, system needs " +
                                std::to_string(spec.feature_dim()));
  }
  if (state.n < 1 || state.features.size() != static_cast<std::size_t>(state.n * state.d)) {
    throw std::invalid_argument(std::string(who) + ": malformed state");
  }
}

}  // namespace

ParticleState sample_initial(int n, const SystemSpec& spec, Rng& rng) {
  if (n < 2) throw std::invalid_argument("sample_initial: need at least 2 particles");
  spec.validate();
  const FeatureLayout lay = spec.layout();
  const double side = std::sqrt(static_cast<double>(n) / spec.intensity);

  ParticleState state;
  state.n = n;
  state.d = lay.dim;
  state.features.assign(static_cast<std::size_t>(n) * lay.dim, 0.0);
  for (int i = 0; i < n; ++i) {
    state.at(i, lay.mass) = 1.0;
    if (lay.charge >= 0) state.at(i, lay.charge) = rng.uniform_open(0.5, 1.5);
    state.at(i, lay.x) = rng.uniform(0.0, side);
    state.at(i, lay.y) = rng.uniform(0.0, side);
    state.at(i, lay.vx) = rng.uniform_open(-1.0, 1.0);
    state.at(i, lay.vy) = rng.uniform_open(-1.0, 1.0);
  }
  return state;
}

std::vector<double> acceleration(const ParticleState& state, const SystemSpec& spec) {
  check_state(state, spec, "acceleration");
  const FeatureLayout lay = spec.layout();
  const int n = state.n;
  const double eps2 = spec.softening * spec.softening;
  std::vector<double> acc(static_cast<std::size_t>(n) * 2, 0.0);

  for (int i = 0; i < n; ++i) {
    const double xi = state.at(i, lay.x), yi = state.at(i, lay.y);
    for (int j = i + 1; j < n; ++j) {
      const double dx = xi - state.at(j, lay.x);
      const double dy = yi - state.at(j, lay.y);
      const double r2 = dx * dx + dy * dy + eps2;
      if (r2 == 0.0) {
        throw std::runtime_error("acceleration: particles " + std::to_string(i) +
                                 " and " + std::to_string(j) +
                                 " coincide with zero softening (division by zero)");
      }
      const double w = 1.0 / (r2 * std::sqrt(r2));
      if (spec.system == SystemType::Gravity) {
        // attraction: a_i = -G sum_j m_j (x_i - x_j) / (r^2 + eps^2)^{3/2}
        const double mi = state.at(i, lay.mass), mj = state.at(j, lay.mass);
        const double s = spec.constant * w;
        acc[2 * i] -= s * mj * dx;
        acc[2 * i + 1] -= s * mj * dy;
        acc[2 * j] += s * mi * dx;
        acc[2 * j + 1] += s * mi * dy;
      } else {
        // like charges repel: a_i = (k/m_i) sum_j c_i c_j (x_i - x_j) / (...)^{3/2}
        const double s = spec.constant * state.at(i, lay.charge) *
                         state.at(j, lay.charge) * w;
        const double mi = state.at(i, lay.mass), mj = state.at(j, lay.mass);
        acc[2 * i] += s * dx / mi;
        acc[2 * i + 1] += s * dy / mi;
        acc[2 * j] -= s * dx / mj;
        acc[2 * j + 1] -= s * dy / mj;
      }
    }
  }
  return acc;
}

ParticleState leapfrog_step(const ParticleState& state, const SystemSpec& spec) {
  check_state(state, spec, "leapfrog_step");
  const FeatureLayout lay = spec.layout();
  const int n = state.n;
  const double half = 0.5 * spec.dt;

  ParticleState next = state;  // static features ride along unchanged
  std::vector<double> acc = acceleration(state, spec);
  for (int i = 0; i < n; ++i) {
    next.at(i, lay.vx) = state.at(i, lay.vx) + half * acc[2 * i];
    next.at(i, lay.vy) = state.at(i, lay.vy) + half * acc[2 * i + 1];
    next.at(i, lay.x) = state.at(i, lay.x) + spec.dt * next.at(i, lay.vx);
    next.at(i, lay.y) = state.at(i, lay.y) + spec.dt * next.at(i, lay.vy);
  }
  acc = acceleration(next, spec);
  for (int i = 0; i < n; ++i) {
    next.at(i, lay.vx) += half * acc[2 * i];
    next.at(i, lay.vy) += half * acc[2 * i + 1];
  }
  return next;
}

double hamiltonian(const ParticleState& state, const SystemSpec& spec) {
  check_state(state, spec, "hamiltonian");
  const FeatureLayout lay = spec.layout();
  const int n = state.n;
  const double eps2 = spec.softening * spec.softening;

  double kinetic = 0.0;
  for (int i = 0; i < n; ++i) {
    const double vx = state.at(i, lay.vx), vy = state.at(i, lay.vy);
    kinetic += 0.5 * state.at(i, lay.mass) * (vx * vx + vy * vy);
  }
  double potential = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = state.at(i, lay.x) - state.at(j, lay.x);
      const double dy = state.at(i, lay.y) - state.at(j, lay.y);
      const double r2 = dx * dx + dy * dy + eps2;
      if (r2 == 0.0) {
        throw std::runtime_error("hamiltonian: particles " + std::to_string(i) + " and " +
                                 std::to_string(j) + " coincide with zero softening");
      }
      const double inv_r = 1.0 / std::sqrt(r2);
      if (spec.system == SystemType::Gravity) {
        potential -= spec.constant * state.at(i, lay.mass) * state.at(j, lay.mass) * inv_r;
      } else {
        potential += spec.constant * state.at(i, lay.charge) * state.at(j, lay.charge) * inv_r;
      }
    }
  }
  return kinetic + potential;
}

Trajectory simulate_trajectory(ParticleState initial, const SystemSpec& spec, int timesteps) {
  if (timesteps < 2) throw std::invalid_argument("simulate_trajectory: need T >= 2");
  Trajectory traj;
  traj.dt_effective = spec.dt;
  traj.states.reserve(timesteps);
  traj.states.push_back(std::move(initial));
  for (int t = 1; t < timesteps; ++t) {
    traj.states.push_back(leapfrog_step(traj.states.back(), spec));
  }
  return traj;
}

DatasetSplits generate_dataset(int n, const SystemSpec& spec, int timesteps,
                               SplitCounts counts, const Rng& rng) {
  if (timesteps < 2) throw std::invalid_argument("generate_dataset: need T >= 2");
  if (counts.train < 1 || counts.val < 0 || counts.test < 0) {
    throw std::invalid_argument("generate_dataset: bad split counts");
  }
  const int total = counts.train + counts.val + counts.test;
  std::vector<Trajectory> all(total);
  parallel_for(total, [&](std::size_t idx) {
    Rng stream = rng.derive(idx);
    try {
      all[idx] = simulate_trajectory(sample_initial(n, spec, stream), spec, timesteps);
    } catch (const std::exception& e) {
      throw std::runtime_error("generate_dataset: trajectory " + std::to_string(idx) +
                               " failed: " + e.what());
    }
  });

  DatasetSplits splits;
  auto take = [&](int from, int count) {
    return std::vector<Trajectory>(std::make_move_iterator(all.begin() + from),
                                   std::make_move_iterator(all.begin() + from + count));
  };
  splits.train = take(0, counts.train);
  splits.val = take(counts.train, counts.val);
  splits.test = take(counts.train + counts.val, counts.test);
  return splits;
}

Trajectory downsample(const Trajectory& trajectory, int stride) {
  if (stride < 1) throw std::invalid_argument("downsample: stride must be >= 1");
  Trajectory out;
  out.dt_effective = trajectory.dt_effective * stride;
  for (std::size_t i = 0; i < trajectory.states.size(); i += stride) {
    out.states.push_back(trajectory.states[i]);
  }
  return out;
}

}  // namespace gnstode
