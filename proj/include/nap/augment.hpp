#pragma once

#include <cstdint>

#include "nap/graph.hpp"

namespace nap {

/// Per-view stochastic transform settings (the two views may differ).
struct AugmentConfig {
  double drop_edge_prob = 0.0;     // in [0, 1)
  double mask_feature_prob = 0.0;  // in [0, 1)
};

/// Throws ConfigInvalid unless both probabilities are in [0, 1).
void validate(const AugmentConfig& cfg);

/// Augmented graph with its normalized adjacency precomputed. Node count,
/// domains and labels always match the source graph; the edge set is a
/// subset and masked feature columns are zero across all nodes.
struct GraphView {
  Graph graph;
  NormalizedAdjacency adjacency;
  std::uint64_t seed = 0;
};

/// Each edge independently removed with probability p.
Graph drop_edges(const Graph& g, double p, std::uint64_t seed);

/// Each feature column independently zeroed across all nodes with
/// probability p.
Matrix mask_features(const Matrix& x, double p, std::uint64_t seed);

/// Two views with sub-seeds derived from the master seed.
std::pair<GraphView, GraphView> make_views(const Graph& g, const AugmentConfig& cfg_alpha,
                                           const AugmentConfig& cfg_beta, std::uint64_t seed);

}  // namespace nap
