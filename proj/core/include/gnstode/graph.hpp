#pragma once

#include <cstdint>
#include <vector>

#include "gnstode/physics.hpp"

namespace gnstode {

/// Directed receiver-oriented interaction graph. Edge e connects
/// receivers[e] <- senders[e]; edge_features holds [dx, dy, dist] per edge
/// with d = sender position - receiver position.
struct SpatialGraph {
  int n = 0;
  std::vector<std::int32_t> receivers;
  std::vector<std::int32_t> senders;
  std::vector<double> edge_features;

  std::size_t num_edges() const { return receivers.size(); }
};

/// For every node, incoming edges from its min(k, n-1) nearest neighbors by
/// Euclidean distance; ties broken by smaller sender index. Edges are emitted
/// receiver-major, nearest first, so the result is deterministic.
SpatialGraph knn_graph(const ParticleState& state, int k);

}  // namespace gnstode
