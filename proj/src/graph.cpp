#include "nap/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nap/errors.hpp"

namespace nap {

const char* violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::EdgeOutOfRange: return "EdgeOutOfRange";
    case ViolationKind::DuplicateEdge: return "DuplicateEdge";
    case ViolationKind::SelfLoopInInput: return "SelfLoopInInput";
    case ViolationKind::UnorderedEdge: return "UnorderedEdge";
    case ViolationKind::EmptyDomain: return "EmptyDomain";
    case ViolationKind::BadDomain: return "BadDomain";
    case ViolationKind::BadLabel: return "BadLabel";
    case ViolationKind::NonFiniteFeature: return "NonFiniteFeature";
  }
  return "?";
}

namespace {

void add(std::vector<Violation>& out, ViolationKind k, long long index, std::string msg) {
  out.push_back({k, index, std::move(msg)});
}

}  // namespace

std::vector<Violation> validate_graph(const Graph& g) {
  std::vector<Violation> out;
  const int n = g.num_nodes;

  if (static_cast<int>(g.domains.size()) != n)
    add(out, ViolationKind::BadDomain, -1, "domain vector length != num_nodes");
  if (static_cast<int>(g.labels.size()) != n)
    add(out, ViolationKind::BadLabel, -1, "label vector length != num_nodes");
  if (g.features.rows != n || g.features.cols != g.num_features)
    add(out, ViolationKind::NonFiniteFeature, -1, "feature matrix shape != N x F");

  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    auto [u, v] = g.edges[e];
    if (u == v) add(out, ViolationKind::SelfLoopInInput, u, "self-loop stored at edge " + std::to_string(e));
    else if (u > v) add(out, ViolationKind::UnorderedEdge, static_cast<long long>(e), "edge endpoints not u < v");
    if (u < 0 || u >= n) add(out, ViolationKind::EdgeOutOfRange, u, "edge endpoint out of range");
    if (v < 0 || v >= n) add(out, ViolationKind::EdgeOutOfRange, v, "edge endpoint out of range");
  }
  {
    std::set<std::pair<int, int>> seen;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      auto canon = std::minmax(g.edges[e].first, g.edges[e].second);
      if (!seen.insert({canon.first, canon.second}).second)
        add(out, ViolationKind::DuplicateEdge, static_cast<long long>(e),
            "duplicate edge {" + std::to_string(canon.first) + "," + std::to_string(canon.second) + "}");
    }
  }

  std::vector<long long> domain_count(std::max(g.num_domains, 0), 0);
  for (int i = 0; i < n && i < static_cast<int>(g.domains.size()); ++i) {
    int d = g.domains[i];
    if (d < 0 || d >= g.num_domains)
      add(out, ViolationKind::BadDomain, i, "domain id " + std::to_string(d) + " out of range");
    else
      ++domain_count[d];
  }
  for (int d = 0; d < g.num_domains; ++d)
    if (domain_count[d] == 0) add(out, ViolationKind::EmptyDomain, d, "no node in domain " + std::to_string(d));

  for (int i = 0; i < n && i < static_cast<int>(g.labels.size()); ++i) {
    int y = g.labels[i];
    if (y < 0 || y >= g.num_classes)
      add(out, ViolationKind::BadLabel, i, "label " + std::to_string(y) + " out of range");
  }

  if (g.features.rows == n && g.features.cols == g.num_features) {
    for (int i = 0; i < n; ++i)
      for (int f = 0; f < g.num_features; ++f)
        if (!std::isfinite(g.features.at(i, f))) {
          add(out, ViolationKind::NonFiniteFeature, i,
              "non-finite feature at node " + std::to_string(i) + ", column " + std::to_string(f));
          f = g.num_features;  // one report per node
        }
  }
  return out;
}

void require_valid(const Graph& g) {
  auto violations = validate_graph(g);
  if (violations.empty()) return;
  std::ostringstream oss;
  oss << violations.size() << " graph invariant violation(s):";
  for (const auto& v : violations)
    oss << "\n  " << violation_kind_name(v.kind) << "(" << v.index << "): " << v.message;
  throw InvariantViolation(oss.str());
}

double NormalizedAdjacency::at(int i, int j) const {
  auto lo = col.begin() + row_ptr[i];
  auto hi = col.begin() + row_ptr[i + 1];
  auto it = std::lower_bound(lo, hi, j);
  if (it == hi || *it != j) return 0.0;
  return val[static_cast<std::size_t>(it - col.begin())];
}

NormalizedAdjacency normalized_adjacency(const Graph& g) {
  const int n = g.num_nodes;
  std::vector<int> degree(n, 0);
  for (auto [u, v] : g.edges) {
    ++degree[u];
    ++degree[v];
  }
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) neighbors[i].push_back(i);  // self-loop
  for (auto [u, v] : g.edges) {
    neighbors[u].push_back(v);
    neighbors[v].push_back(u);
  }

  NormalizedAdjacency adj;
  adj.n = n;
  adj.row_ptr.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    std::sort(neighbors[i].begin(), neighbors[i].end());
    adj.row_ptr[i + 1] = adj.row_ptr[i] + static_cast<int>(neighbors[i].size());
  }
  adj.col.reserve(adj.row_ptr[n]);
  adj.val.reserve(adj.row_ptr[n]);
  for (int i = 0; i < n; ++i) {
    const double di = 1.0 / std::sqrt(static_cast<double>(degree[i] + 1));
    for (int j : neighbors[i]) {
      adj.col.push_back(j);
      adj.val.push_back(di / std::sqrt(static_cast<double>(degree[j] + 1)));
    }
  }
  return adj;
}

Subgraph extract_domains(const Graph& g, const std::vector<int>& domain_ids) {
  std::vector<int> selected = domain_ids;
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  for (int d : selected)
    if (d < 0 || d >= g.num_domains)
      throw ConfigInvalid("domain id " + std::to_string(d) + " not in graph (P=" + std::to_string(g.num_domains) + ")");

  std::vector<int> compact_of_domain(g.num_domains, -1);
  for (std::size_t k = 0; k < selected.size(); ++k) compact_of_domain[selected[k]] = static_cast<int>(k);

  Subgraph sub;
  sub.orig_domains = selected;
  std::vector<int> new_index(g.num_nodes, -1);
  for (int i = 0; i < g.num_nodes; ++i) {
    if (compact_of_domain[g.domains[i]] >= 0) {
      new_index[i] = static_cast<int>(sub.orig_nodes.size());
      sub.orig_nodes.push_back(i);
    }
  }

  Graph& out = sub.graph;
  out.num_nodes = static_cast<int>(sub.orig_nodes.size());
  out.num_features = g.num_features;
  out.num_domains = static_cast<int>(selected.size());
  out.num_classes = g.num_classes;
  out.features = Matrix(out.num_nodes, out.num_features);
  out.domains.resize(out.num_nodes);
  out.labels.resize(out.num_nodes);
  for (int i = 0; i < out.num_nodes; ++i) {
    int orig = sub.orig_nodes[i];
    for (int f = 0; f < g.num_features; ++f) out.features.at(i, f) = g.features.at(orig, f);
    out.domains[i] = compact_of_domain[g.domains[orig]];
    out.labels[i] = g.labels[orig];
  }
  for (auto [u, v] : g.edges)
    if (new_index[u] >= 0 && new_index[v] >= 0) out.edges.emplace_back(new_index[u], new_index[v]);
  std::sort(out.edges.begin(), out.edges.end());
  return sub;
}

long long count_cross_domain_pairs(const std::vector<int>& domains) {
  std::vector<long long> count;
  for (int d : domains) {
    if (d >= static_cast<int>(count.size())) count.resize(d + 1, 0);
    ++count[d];
  }
  const long long n = static_cast<long long>(domains.size());
  long long same = 0;
  for (long long c : count) same += c * c;
  return n * n - same;
}

}  // namespace nap
