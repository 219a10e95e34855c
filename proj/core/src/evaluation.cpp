#include "gnstode/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gnstode/parallel.hpp"

namespace gnstode {

RolloutResult rollout(const ParticleState& x1, const ModelParameters& params,
                      const ModelConfig& config, int timesteps, double dt_effective) {
  if (timesteps < 2) throw std::invalid_argument("rollout: need T >= 2");
  RolloutResult result;
  result.trajectory.dt_effective = dt_effective;
  result.trajectory.states.reserve(timesteps);
  result.trajectory.states.push_back(x1);
  for (int t = 1; t < timesteps; ++t) {
    ParticleState next;
    try {
      next = predict_step(result.trajectory.states.back(), params, config);
    } catch (const std::runtime_error&) {
      result.diverged = true;
      result.divergence_step = t;
      break;
    }
    result.trajectory.states.push_back(std::move(next));
  }
  return result;
}

namespace {

void check_matched(std::span<const Trajectory> predicted,
                   std::span<const Trajectory> truth, const char* who) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(predicted.size()) +
                                " predicted vs " + std::to_string(truth.size()) +
                                " ground-truth trajectories");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].length() > truth[i].length() || predicted[i].length() < 1) {
      throw std::invalid_argument(std::string(who) + ": trajectory " + std::to_string(i) +
                                  " has " + std::to_string(predicted[i].length()) +
                                  " predicted states for " +
                                  std::to_string(truth[i].length()) + " ground-truth ones");
    }
  }
}

double sq_coord_error(const Trajectory& predicted, const Trajectory& truth,
                      const FeatureLayout& lay) {
  double total = 0.0;
  for (int t = 1; t < predicted.length(); ++t) {
    const ParticleState& p = predicted.states[t];
    const ParticleState& g = truth.states[t];
    if (p.n != g.n) throw std::invalid_argument("rmse: particle count mismatch");
    for (int i = 0; i < p.n; ++i) {
      const double dx = p.at(i, lay.x) - g.at(i, lay.x);
      const double dy = p.at(i, lay.y) - g.at(i, lay.y);
      total += dx * dx + dy * dy;
    }
  }
  return total;
}

}  // namespace

double rmse(std::span<const Trajectory> predicted, std::span<const Trajectory> truth,
            SystemType system) {
  check_matched(predicted, truth, "rmse");
  const FeatureLayout lay = layout_for(system);
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    total += sq_coord_error(predicted[i], truth[i], lay);
  }
  return std::sqrt(total / static_cast<double>(predicted.size()));
}

double energy_error(std::span<const Trajectory> predicted,
                    std::span<const Trajectory> truth, const SystemSpec& spec) {
  check_matched(predicted, truth, "energy_error");
  double total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double h1 = hamiltonian(truth[i].states.front(), spec);
    if (h1 == 0.0) {
      throw std::runtime_error("energy_error: trajectory " + std::to_string(i) +
                               " has zero initial Hamiltonian");
    }
    const double ht = hamiltonian(predicted[i].states.back(), spec);
    total += std::abs(h1 - ht) / std::abs(h1);
  }
  return total / static_cast<double>(predicted.size());
}

Trajectory constant_velocity_baseline(const ParticleState& x1, int timesteps,
                                      double dt_effective) {
  if (timesteps < 2) throw std::invalid_argument("constant_velocity_baseline: need T >= 2");
  const FeatureLayout lay =
      layout_for(x1.d == 5 ? SystemType::Gravity : SystemType::Coulomb);
  Trajectory traj;
  traj.dt_effective = dt_effective;
  traj.states.reserve(timesteps);
  traj.states.push_back(x1);
  for (int t = 1; t < timesteps; ++t) {
    ParticleState next = traj.states.back();
    for (int i = 0; i < next.n; ++i) {
      next.at(i, lay.x) += dt_effective * x1.at(i, lay.vx);
      next.at(i, lay.y) += dt_effective * x1.at(i, lay.vy);
    }
    traj.states.push_back(std::move(next));
  }
  return traj;
}

EvalReport evaluate(std::span<const Trajectory> test, const ModelParameters& params,
                    const ModelConfig& config, const SystemSpec& spec) {
  if (test.empty()) throw std::invalid_argument("evaluate: no test trajectories");
  const FeatureLayout lay = spec.layout();

  EvalReport report;
  report.system = spec.system;
  report.n = test[0].states[0].n;
  report.d = test[0].states[0].d;
  report.timesteps = test[0].length();
  report.num_trajectories = static_cast<int>(test.size());
  report.dt_effective = test[0].dt_effective;
  report.constant = spec.constant;
  report.intensity = spec.intensity;
  report.softening = spec.softening;
  report.ablate_spatial = config.ablate_spatial;
  report.ablate_temporal = config.ablate_temporal;

  std::vector<RolloutResult> rollouts(test.size());
  parallel_for(test.size(), [&](std::size_t i) {
    rollouts[i] = rollout(test[i].states.front(), params, config, test[i].length(),
                          test[i].dt_effective);
  });

  report.per_trajectory.resize(test.size());
  double total_sq = 0.0, total_energy = 0.0, baseline_sq = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    TrajectoryEval& row = report.per_trajectory[i];
    row.diverged = rollouts[i].diverged;
    row.divergence_step = rollouts[i].divergence_step;
    row.sq_coord_error = sq_coord_error(rollouts[i].trajectory, test[i], lay);
    row.rmse = std::sqrt(row.sq_coord_error);
    const double h1 = hamiltonian(test[i].states.front(), spec);
    if (h1 == 0.0) {
      throw std::runtime_error("evaluate: trajectory " + std::to_string(i) +
                               " has zero initial Hamiltonian");
    }
    const double ht = hamiltonian(rollouts[i].trajectory.states.back(), spec);
    row.energy_error = std::abs(h1 - ht) / std::abs(h1);
    total_sq += row.sq_coord_error;
    total_energy += row.energy_error;

    const Trajectory baseline = constant_velocity_baseline(
        test[i].states.front(), test[i].length(), test[i].dt_effective);
    baseline_sq += sq_coord_error(baseline, test[i], lay);
  }
  const double n_traj = static_cast<double>(test.size());
  report.rmse = std::sqrt(total_sq / n_traj);
  report.energy_error = total_energy / n_traj;
  report.baseline_rmse = std::sqrt(baseline_sq / n_traj);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["system"] = report.system == SystemType::Gravity ? "gravity" : "coulomb";
  j["n"] = report.n;
  j["d"] = report.d;
  j["timesteps"] = report.timesteps;
  j["num_trajectories"] = report.num_trajectories;
  j["dt_effective"] = report.dt_effective;
  j["constant"] = report.constant;
  j["intensity"] = report.intensity;
  j["softening"] = report.softening;
  j["ablate_spatial"] = report.ablate_spatial;
  j["ablate_temporal"] = report.ablate_temporal;
  j["rmse"] = report.rmse;
  j["energy_error"] = report.energy_error;
  j["baseline_rmse"] = report.baseline_rmse;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const TrajectoryEval& row : report.per_trajectory) {
    nlohmann::ordered_json r;
    r["sq_coord_error"] = row.sq_coord_error;
    r["rmse"] = row.rmse;
    r["energy_error"] = row.energy_error;
    r["diverged"] = row.diverged;
    r["divergence_step"] = row.divergence_step;
    rows.push_back(std::move(r));
  }
  j["per_trajectory"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          SystemType system, const std::string& label, bool header) {
  const FeatureLayout lay = layout_for(system);
  if (header) {
    out << "label,t,particle,m";
    if (lay.charge >= 0) out << ",c";
    out << ",x,y,vx,vy\n";
  }
  char buf[32];
  for (int t = 0; t < trajectory.length(); ++t) {
    const ParticleState& state = trajectory.states[t];
    for (int i = 0; i < state.n; ++i) {
      out << label << ',' << t << ',' << i;
      for (int f = 0; f < state.d; ++f) {
        std::snprintf(buf, sizeof(buf), "%.17g", state.at(i, f));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace gnstode
