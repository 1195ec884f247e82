#include "nap/encoder.hpp"

#include <cmath>
#include <string>

#include "nap/errors.hpp"
#include "nap/rng.hpp"

namespace nap {

std::vector<int> EncoderConfig::widths() const {
  std::vector<int> w;
  w.push_back(in_dim);
  for (int l = 1; l < num_layers; ++l) w.push_back(hidden_dim);
  w.push_back(embed_dim);
  return w;
}

void validate(const EncoderConfig& cfg) {
  if (cfg.in_dim <= 0) throw ConfigInvalid("in_dim must be positive");
  if (cfg.hidden_dim <= 0) throw ConfigInvalid("hidden_dim must be positive");
  if (cfg.embed_dim <= 0) throw ConfigInvalid("embed_dim must be positive");
  if (cfg.num_layers < 1) throw ConfigInvalid("num_layers must be at least 1");
  if (cfg.proj_dim < 0) throw ConfigInvalid("proj_dim must be nonnegative");
}

std::vector<ParamTensor*> all_params(EncoderParams& p) {
  std::vector<ParamTensor*> out;
  for (ParamTensor& w : p.weights) out.push_back(&w);
  for (ParamTensor& w : p.proj_weights) out.push_back(&w);
  return out;
}

namespace {

Matrix glorot(int fan_in, int fan_out, std::uint64_t seed) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Rng rng(seed);
  Matrix w(fan_in, fan_out);
  for (double& v : w.data) v = rng.uniform_in(-limit, limit);
  return w;
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  EncoderParams p;
  const std::vector<int> w = cfg.widths();
  for (int l = 0; l < cfg.num_layers; ++l)
    p.weights.push_back({glorot(w[l], w[l + 1], derive_seed(seed, l)), std::nullopt});
  if (cfg.projection_head) {
    const int pd = cfg.proj_dim > 0 ? cfg.proj_dim : cfg.embed_dim;
    p.proj_weights.push_back({glorot(cfg.embed_dim, pd, derive_seed(seed, 100)), std::nullopt});
    p.proj_weights.push_back({glorot(pd, pd, derive_seed(seed, 101)), std::nullopt});
  }
  return p;
}

Tensor gcn_forward(Tape& tape, const GraphView& view, EncoderParams& params) {
  if (params.weights.empty()) throw ConfigInvalid("encoder has no layers");
  if (params.weights.front().value.rows != view.graph.num_features)
    throw ShapeMismatch("layer 0 expects width " +
                        std::to_string(params.weights.front().value.rows) + ", features have " +
                        std::to_string(view.graph.num_features));
  Tensor h = tape.constant(view.graph.features);
  const int L = static_cast<int>(params.weights.size());
  for (int l = 0; l < L; ++l) {
    h = spmm(view.adjacency, h);
    h = matmul(h, tape.param(params.weights[l]));
    if (l + 1 < L) h = relu(h);
  }
  for (std::size_t l = 0; l < params.proj_weights.size(); ++l) {
    h = matmul(h, tape.param(params.proj_weights[l]));
    if (l + 1 < params.proj_weights.size()) h = relu(h);
  }
  return h;
}

Matrix encode(const NormalizedAdjacency& adj, const Matrix& features, const EncoderParams& params) {
  Matrix h = features;
  const int L = static_cast<int>(params.weights.size());
  for (int l = 0; l < L; ++l) {
    h = spmm_value(adj, h);
    h = matmul(h, params.weights[l].value);
    if (l + 1 < L)
      for (double& v : h.data) v = v > 0.0 ? v : 0.0;
  }
  for (std::size_t l = 0; l < params.proj_weights.size(); ++l) {
    h = matmul(h, params.proj_weights[l].value);
    if (l + 1 < params.proj_weights.size())
      for (double& v : h.data) v = v > 0.0 ? v : 0.0;
  }
  return h;
}

}  // namespace nap
