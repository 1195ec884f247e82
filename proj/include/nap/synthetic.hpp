#pragma once

#include <cstdint>
#include <vector>

#include "nap/graph.hpp"

namespace nap {

/// Per-domain stochastic block model with class-conditional features.
/// Feature of node i: class_signal_strength * mu(label_i)
///                  + domain_shift_strength * nu(domain_i)
///                  + noise_std * standard normal vector,
/// with mu and nu fixed random unit vectors drawn from the seed. No edge
/// crosses domains, so distribution shift lives in the feature means while
/// class structure stays domain-invariant.
struct SyntheticConfig {
  int num_domains = 6;
  int num_classes = 3;
  int nodes_per_domain = 60;
  int num_features = 32;
  double intra_class_edge_prob = 0.15;
  double inter_class_edge_prob = 0.03;
  double class_signal_strength = 1.0;
  double domain_shift_strength = 1.0;
  double noise_std = 0.3;
  std::uint64_t seed = 0;
};

/// Throws ConfigInvalid on nonpositive counts, probabilities outside [0,1],
/// intra <= inter, or negative strengths.
void validate(const SyntheticConfig& cfg);

/// Deterministic given the seed. Nodes are domain-blocked: domain d holds
/// nodes [d*nodes_per_domain, (d+1)*nodes_per_domain).
Graph generate(const SyntheticConfig& cfg);

/// Disjoint domain roles for OOD evaluation.
struct DomainSplit {
  std::vector<int> source;
  std::vector<int> validation;
  std::vector<int> target;
};

/// Seeded random partition of {0..num_domains-1}; each role list returned
/// ascending. Throws TooFewDomains when the requested counts exceed
/// num_domains, ConfigInvalid when any count is not positive.
DomainSplit make_split(int num_domains, int n_source, int n_val, int n_target,
                       std::uint64_t seed);

}  // namespace nap
