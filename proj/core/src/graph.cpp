#include "gnstode/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gnstode {

SpatialGraph knn_graph(const ParticleState& state, int k) {
  if (state.n < 2) throw std::invalid_argument("knn_graph: need at least 2 particles");
  if (k < 1) throw std::invalid_argument("knn_graph: k must be >= 1");
  const FeatureLayout lay =
      layout_for(state.d == 5 ? SystemType::Gravity : SystemType::Coulomb);
  if (state.d != 5 && state.d != 6) {
    throw std::invalid_argument("knn_graph: unsupported feature dimension " +
                                std::to_string(state.d));
  }

  const int n = state.n;
  const int k_eff = std::min(k, n - 1);
  SpatialGraph graph;
  graph.n = n;
  graph.receivers.reserve(static_cast<std::size_t>(n) * k_eff);
  graph.senders.reserve(static_cast<std::size_t>(n) * k_eff);
  graph.edge_features.reserve(static_cast<std::size_t>(n) * k_eff * 3);

  std::vector<std::pair<double, std::int32_t>> candidates(n - 1);
  for (int i = 0; i < n; ++i) {
    const double xi = state.at(i, lay.x), yi = state.at(i, lay.y);
    int m = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = state.at(j, lay.x) - xi;
      const double dy = state.at(j, lay.y) - yi;
      const double d2 = dx * dx + dy * dy;
      if (d2 == 0.0) {
        throw std::runtime_error("knn_graph: particles " + std::to_string(i) + " and " +
                                 std::to_string(j) + " have identical coordinates");
      }
      candidates[m++] = {d2, j};
    }
    std::partial_sort(candidates.begin(), candidates.begin() + k_eff, candidates.end());
    for (int e = 0; e < k_eff; ++e) {
      const std::int32_t j = candidates[e].second;
      const double dx = state.at(j, lay.x) - xi;
      const double dy = state.at(j, lay.y) - yi;
      graph.receivers.push_back(i);
      graph.senders.push_back(j);
      graph.edge_features.push_back(dx);
      graph.edge_features.push_back(dy);
      graph.edge_features.push_back(std::sqrt(candidates[e].first));
    }
  }
  return graph;
}

}  // namespace gnstode
