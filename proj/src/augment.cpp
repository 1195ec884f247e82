#include "nap/augment.hpp"

#include "nap/errors.hpp"
#include "nap/rng.hpp"
#include "nap/text.hpp"

namespace nap {

void validate(const AugmentConfig& cfg) {
  auto check = [](double p, const char* name) {
    if (!(p >= 0.0 && p < 1.0))
      throw ConfigInvalid(std::string(name) + " must be in [0, 1), got " + fmt_double(p));
  };
  check(cfg.drop_edge_prob, "drop_edge_prob");
  check(cfg.mask_feature_prob, "mask_feature_prob");
}

Graph drop_edges(const Graph& g, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigInvalid("drop probability must be in [0, 1)");
  Graph out = g;
  if (p == 0.0) return out;
  out.edges.clear();
  Rng rng(seed);
  for (const auto& e : g.edges)
    if (!rng.bernoulli(p)) out.edges.push_back(e);
  return out;
}

Matrix mask_features(const Matrix& x, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw ConfigInvalid("mask probability must be in [0, 1)");
  Matrix out = x;
  if (p == 0.0) return out;
  Rng rng(seed);
  for (int c = 0; c < x.cols; ++c) {
    if (rng.bernoulli(p))
      for (int r = 0; r < x.rows; ++r) out.at(r, c) = 0.0;
  }
  return out;
}

namespace {

GraphView make_view(const Graph& g, const AugmentConfig& cfg, std::uint64_t view_seed) {
  GraphView view;
  view.seed = view_seed;
  view.graph = drop_edges(g, cfg.drop_edge_prob, derive_seed(view_seed, 1));
  view.graph.features = mask_features(g.features, cfg.mask_feature_prob, derive_seed(view_seed, 2));
  view.adjacency = normalized_adjacency(view.graph);
  return view;
}

}  // namespace

std::pair<GraphView, GraphView> make_views(const Graph& g, const AugmentConfig& cfg_alpha,
                                           const AugmentConfig& cfg_beta, std::uint64_t seed) {
  validate(cfg_alpha);
  validate(cfg_beta);
  return {make_view(g, cfg_alpha, derive_seed(seed, 1)), make_view(g, cfg_beta, derive_seed(seed, 2))};
}

}  // namespace nap
