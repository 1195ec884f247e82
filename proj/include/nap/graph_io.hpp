#pragma once

#include <string>

#include "nap/graph.hpp"

namespace nap {

/// Structured-text (JSON) graph document with fields num_nodes,
/// num_features, num_domains, num_classes, features (row-major array of
/// arrays), edges (array of [u, v] with u < v, sorted), domains, labels.
/// Numbers are shortest round-trip decimals; save -> load is a bit-exact
/// identity. Both directions validate the graph and throw
/// InvariantViolation on a bad one; load throws ParseError with positional
/// diagnostics on malformed text and IoError on file problems.
void save_graph(const Graph& g, const std::string& path);
Graph load_graph(const std::string& path);

}  // namespace nap
