#include "nap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nap/errors.hpp"
#include "nap/rng.hpp"

namespace nap {

void validate(const SyntheticConfig& cfg) {
  if (cfg.num_domains < 1) throw ConfigInvalid("num_domains must be positive");
  if (cfg.num_classes < 1) throw ConfigInvalid("num_classes must be positive");
  if (cfg.nodes_per_domain < 1) throw ConfigInvalid("nodes_per_domain must be positive");
  if (cfg.num_features < 1) throw ConfigInvalid("num_features must be positive");
  for (double p : {cfg.intra_class_edge_prob, cfg.inter_class_edge_prob})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigInvalid("edge probabilities must be in [0, 1]");
  if (!(cfg.intra_class_edge_prob > cfg.inter_class_edge_prob))
    throw ConfigInvalid("intra_class_edge_prob must exceed inter_class_edge_prob");
  if (cfg.class_signal_strength < 0.0 || cfg.domain_shift_strength < 0.0 || cfg.noise_std < 0.0)
    throw ConfigInvalid("strengths and noise_std must be nonnegative");
}

namespace {

Matrix random_unit_rows(int count, int dim, Rng& rng) {
  Matrix m(count, dim);
  for (int i = 0; i < count; ++i) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) {
      m.at(i, c) = rng.normal();
      s += m.at(i, c) * m.at(i, c);
    }
    const double n = std::sqrt(s);
    if (n > 0.0)
      for (int c = 0; c < dim; ++c) m.at(i, c) /= n;
    else
      m.at(i, 0) = 1.0;
  }
  return m;
}

}  // namespace

Graph generate(const SyntheticConfig& cfg) {
  validate(cfg);
  const int P = cfg.num_domains;
  const int K = cfg.num_classes;
  const int npd = cfg.nodes_per_domain;
  const int F = cfg.num_features;
  const int N = P * npd;

  Rng rng_labels(derive_seed(cfg.seed, 1));
  Rng rng_classvec(derive_seed(cfg.seed, 2));
  Rng rng_domainvec(derive_seed(cfg.seed, 3));
  Rng rng_edges(derive_seed(cfg.seed, 4));
  Rng rng_noise(derive_seed(cfg.seed, 5));

  Graph g;
  g.num_nodes = N;
  g.num_features = F;
  g.num_domains = P;
  g.num_classes = K;
  g.domains.resize(N);
  g.labels.resize(N);
  for (int i = 0; i < N; ++i) {
    g.domains[i] = i / npd;
    g.labels[i] = static_cast<int>(rng_labels.below(static_cast<std::uint64_t>(K)));
  }

  const Matrix mu = random_unit_rows(K, F, rng_classvec);
  const Matrix nu = random_unit_rows(P, F, rng_domainvec);

  for (int d = 0; d < P; ++d) {
    const int base = d * npd;
    for (int i = 0; i < npd; ++i)
      for (int j = i + 1; j < npd; ++j) {
        const bool same = g.labels[base + i] == g.labels[base + j];
        const double p = same ? cfg.intra_class_edge_prob : cfg.inter_class_edge_prob;
        if (rng_edges.bernoulli(p)) g.edges.emplace_back(base + i, base + j);
      }
  }

  g.features = Matrix(N, F);
  for (int i = 0; i < N; ++i)
    for (int c = 0; c < F; ++c)
      g.features.at(i, c) = cfg.class_signal_strength * mu.at(g.labels[i], c) +
                            cfg.domain_shift_strength * nu.at(g.domains[i], c) +
                            cfg.noise_std * rng_noise.normal();

  require_valid(g);
  return g;
}

DomainSplit make_split(int num_domains, int n_source, int n_val, int n_target,
                       std::uint64_t seed) {
  if (n_source < 1 || n_val < 1 || n_target < 1)
    throw ConfigInvalid("every split role needs at least one domain");
  if (n_source + n_val + n_target > num_domains)
    throw TooFewDomains(std::to_string(num_domains) + " domains cannot fill roles " +
                        std::to_string(n_source) + "+" + std::to_string(n_val) + "+" +
                        std::to_string(n_target));
  std::vector<int> ids(num_domains);
  for (int i = 0; i < num_domains; ++i) ids[i] = i;
  Rng rng(seed);
  for (int i = num_domains - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(ids[i], ids[j]);
  }
  DomainSplit split;
  split.source.assign(ids.begin(), ids.begin() + n_source);
  split.validation.assign(ids.begin() + n_source, ids.begin() + n_source + n_val);
  split.target.assign(ids.begin() + n_source + n_val, ids.begin() + n_source + n_val + n_target);
  std::sort(split.source.begin(), split.source.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.target.begin(), split.target.end());
  return split;
}

}  // namespace nap
