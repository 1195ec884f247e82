#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nap/matrix.hpp"

namespace nap {

/// Undirected multi-domain graph. Edges are stored once with u < v; the
/// adjacency is materialized symmetrically when needed. Immutable by
/// convention after construction.
struct Graph {
  int num_nodes = 0;
  int num_features = 0;
  Matrix features;                         // N x F
  std::vector<std::pair<int, int>> edges;  // u < v, sorted, unique
  std::vector<int> domains;                // size N, ids in [0, num_domains)
  std::vector<int> labels;                 // size N, ids in [0, num_classes)
  int num_domains = 0;
  int num_classes = 0;
};

enum class ViolationKind {
  EdgeOutOfRange,
  DuplicateEdge,
  SelfLoopInInput,
  UnorderedEdge,
  EmptyDomain,
  BadDomain,
  BadLabel,
  NonFiniteFeature,
};

struct Violation {
  ViolationKind kind;
  long long index;  // offending node/edge/domain index
  std::string message;
};

const char* violation_kind_name(ViolationKind k);

/// Returns every violated invariant (empty list == valid graph).
std::vector<Violation> validate_graph(const Graph& g);

/// Throws InvariantViolation listing all violations.
void require_valid(const Graph& g);

/// Symmetric-normalized adjacency with self-loops in CSR form:
/// entry (i,j) = 1/sqrt((deg_i+1)(deg_j+1)) for {i,j} in edges or i == j.
struct NormalizedAdjacency {
  int n = 0;
  std::vector<int> row_ptr;  // size n+1
  std::vector<int> col;      // sorted within each row
  std::vector<double> val;

  double at(int i, int j) const;  // 0.0 when not stored
  std::size_t nnz() const { return col.size(); }
};

NormalizedAdjacency normalized_adjacency(const Graph& g);

/// Node-induced subgraph of the given domains, with domain ids remapped to
/// a dense range (ascending original id order). Labels and class count are
/// untouched.
struct Subgraph {
  Graph graph;
  std::vector<int> orig_nodes;    // compact index -> original node id
  std::vector<int> orig_domains;  // compact domain id -> original domain id
};

Subgraph extract_domains(const Graph& g, const std::vector<int>& domain_ids);

/// Ordered cross-domain pair count: |{(i,j) : d_i != d_j}|.
long long count_cross_domain_pairs(const std::vector<int>& domains);

}  // namespace nap
