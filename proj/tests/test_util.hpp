#pragma once

// Shared helpers for the test suite: scratch directories, small random
// instances, and independent straight-line oracles that deliberately avoid
// the library's own kernels (scalar loops only).

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nap/encoder.hpp"
#include "nap/graph.hpp"
#include "nap/matrix.hpp"
#include "nap/rng.hpp"
#include "nap/tensor.hpp"

namespace testutil {

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    auto base = std::filesystem::temp_directory_path();
    path_ = base / ("napgcl_test_" + tag + "_" + std::to_string(++counter) + "_" +
                    std::to_string(static_cast<long long>(::getpid())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Random valid graph: every domain non-empty, labels cyclic, features
/// standard normal, each node pair within a domain an edge with edge_prob
/// (cross-domain edges only when cross_edges is set).
inline nap::Graph random_graph(nap::Rng& rng, int n, int num_domains, int num_classes,
                               int num_features, double edge_prob, bool cross_edges = true) {
  nap::Graph g;
  g.num_nodes = n;
  g.num_features = num_features;
  g.num_domains = num_domains;
  g.num_classes = num_classes;
  g.features = nap::Matrix(n, num_features);
  for (double& x : g.features.data) x = rng.normal();
  g.domains.resize(n);
  g.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    g.domains[i] = i % num_domains;  // cyclic keeps every domain non-empty for n >= P
    g.labels[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_classes)));
  }
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      if (!cross_edges && g.domains[u] != g.domains[v]) continue;
      if (rng.bernoulli(edge_prob)) g.edges.emplace_back(u, v);
    }
  return g;
}

inline nap::Matrix random_matrix(nap::Rng& rng, int rows, int cols) {
  nap::Matrix m(rows, cols);
  for (double& x : m.data) x = rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// Independent scalar oracles
// ---------------------------------------------------------------------------

/// cos(x row i, y row j) by scalar loops; all-zero rows give 0.
inline double ref_cos(const nap::Matrix& x, int i, const nap::Matrix& y, int j) {
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (int c = 0; c < x.cols; ++c) {
    dot += x.at(i, c) * y.at(j, c);
    nx += x.at(i, c) * x.at(i, c);
    ny += y.at(j, c) * y.at(j, c);
  }
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

/// Symmetrized promoted-pair objective evaluated entirely with scalar
/// arithmetic. An empty pair list is the plain warm-up objective.
inline double ref_combined_loss(const nap::Matrix& ha, const nap::Matrix& hb,
                                const std::vector<std::pair<int, int>>& pairs, double tau) {
  const int n = ha.rows;
  auto anchor = [&](const nap::Matrix& a, const nap::Matrix& b,
                    const std::vector<std::pair<int, int>>& m) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double pos = std::exp(ref_cos(a, i, b, i) / tau);
      double den = pos;
      for (int j = 0; j < n; ++j)
        if (j != i) den += std::exp(ref_cos(a, i, b, j) / tau) + std::exp(ref_cos(a, i, a, j) / tau);
      double num = pos;
      for (auto [p, q] : m)
        if (p == i && q != i)
          num += std::exp(ref_cos(a, i, b, q) / tau) + std::exp(ref_cos(a, i, a, q) / tau);
      total += -std::log(num / den);
    }
    return total;
  };
  std::vector<std::pair<int, int>> t;
  t.reserve(pairs.size());
  for (auto [i, j] : pairs) t.emplace_back(j, i);
  return (anchor(ha, hb, pairs) + anchor(hb, ha, t)) / (2.0 * n);
}

inline double ref_warmup_loss(const nap::Matrix& ha, const nap::Matrix& hb, double tau) {
  return ref_combined_loss(ha, hb, {}, tau);
}

/// Dense symmetric-normalized adjacency with self-loops, by full matrix
/// algebra.
inline nap::Matrix dense_normalized_adjacency(const nap::Graph& g) {
  const int n = g.num_nodes;
  std::vector<int> deg(n, 0);
  for (auto [u, v] : g.edges) {
    ++deg[u];
    ++deg[v];
  }
  nap::Matrix a(n, n);
  for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
  for (auto [u, v] : g.edges) {
    a.at(u, v) = 1.0;
    a.at(v, u) = 1.0;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (a.at(i, j) != 0.0)
        a.at(i, j) = 1.0 / std::sqrt((deg[i] + 1.0) * (deg[j] + 1.0));
  return a;
}

/// Straight-line dense reimplementation of the encoder forward pass.
inline nap::Matrix dense_gcn(const nap::Graph& g, const std::vector<nap::Matrix>& weights) {
  nap::Matrix a = dense_normalized_adjacency(g);
  nap::Matrix h = g.features;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = nap::matmul(nap::matmul(a, h), weights[l]);
    if (l + 1 < weights.size())
      for (double& x : h.data) x = x > 0.0 ? x : 0.0;
  }
  return h;
}

/// Mean pairwise distance between domain centers by double loop.
inline double ref_pdd(const nap::Matrix& h, const std::vector<int>& domains) {
  std::vector<int> ids;
  for (int d : domains)
    if (std::find(ids.begin(), ids.end(), d) == ids.end()) ids.push_back(d);
  std::sort(ids.begin(), ids.end());
  const int p = static_cast<int>(ids.size());
  nap::Matrix centers(p, h.cols);
  for (int k = 0; k < p; ++k) {
    int count = 0;
    for (int i = 0; i < h.rows; ++i)
      if (domains[i] == ids[k]) {
        ++count;
        for (int c = 0; c < h.cols; ++c) centers.at(k, c) += h.at(i, c);
      }
    for (int c = 0; c < h.cols; ++c) centers.at(k, c) /= count;
  }
  double total = 0.0;
  int pairs = 0;
  for (int x = 0; x < p; ++x)
    for (int y = x + 1; y < p; ++y) {
      double sq = 0.0;
      for (int c = 0; c < h.cols; ++c) {
        const double d = centers.at(x, c) - centers.at(y, c);
        sq += d * d;
      }
      total += std::sqrt(sq);
      ++pairs;
    }
  return total / pairs;
}

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

/// Analytic gradients of a tape-built scalar w.r.t. the given parameters;
/// leaves every grad cleared afterwards.
inline std::vector<nap::Matrix> analytic_grads(const std::vector<nap::ParamTensor*>& params,
                                               const std::function<nap::Tensor(nap::Tape&)>& build) {
  nap::Tape tape;
  nap::Tensor loss = build(tape);
  tape.backward(loss);
  std::vector<nap::Matrix> out;
  out.reserve(params.size());
  for (auto* p : params) {
    out.push_back(p->grad ? *p->grad : nap::Matrix(p->value.rows, p->value.cols));
    p->grad.reset();
  }
  return out;
}

/// Worst relative error between analytic and central-finite-difference
/// gradients over every entry of every parameter. The relative-error
/// denominator is floored so near-zero gradients are compared absolutely.
inline double max_fd_rel_err(const std::vector<nap::ParamTensor*>& params,
                             const std::function<nap::Tensor(nap::Tape&)>& build,
                             double h = 1e-5) {
  const auto grads = analytic_grads(params, build);
  auto eval = [&]() {
    nap::Tape tape;
    return build(tape).value().at(0, 0);
  };
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    nap::Matrix& w = params[pi]->value;
    for (std::size_t e = 0; e < w.data.size(); ++e) {
      const double saved = w.data[e];
      w.data[e] = saved + h;
      const double fp = eval();
      w.data[e] = saved - h;
      const double fm = eval();
      w.data[e] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double a = grads[pi].data[e];
      const double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

inline std::string read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return {};
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
  std::fclose(f);
  return out;
}

}  // namespace testutil
