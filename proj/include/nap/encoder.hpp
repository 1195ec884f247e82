#pragma once

#include <cstdint>
#include <vector>

#include "nap/augment.hpp"
#include "nap/tensor.hpp"

namespace nap {

/// Architecture of the GCN encoder. The optional projection head (two dense
/// layers with a ReLU between them, applied after the encoder) is off by
/// default; the contrastive similarity is then taken directly on encoder
/// outputs.
struct EncoderConfig {
  int in_dim = 0;
  int hidden_dim = 64;
  int embed_dim = 32;
  int num_layers = 2;
  bool projection_head = false;
  int proj_dim = 0;  // 0 means embed_dim

  /// Width of layer l's input, l in [0, num_layers].
  std::vector<int> widths() const;
};

/// Throws ConfigInvalid on nonpositive dims or num_layers < 1.
void validate(const EncoderConfig& cfg);

/// Trainable state: one weight matrix per GCN layer, mapping width_l to
/// width_{l+1}; plus the two projection matrices when the head is enabled.
struct EncoderParams {
  std::vector<ParamTensor> weights;
  std::vector<ParamTensor> proj_weights;
};

/// All trainable matrices in a fixed order (GCN layers, then projection).
std::vector<ParamTensor*> all_params(EncoderParams& p);

/// Seeded uniform Glorot init, limit sqrt(6 / (fan_in + fan_out)). Each
/// layer draws from its own derived sub-stream.
EncoderParams init_encoder(const EncoderConfig& cfg, std::uint64_t seed);

/// Recorded forward pass: H^{l+1} = sigma(A_hat H^l W^l) with ReLU on hidden
/// layers and identity on the final layer; H^0 = view features. The view must
/// outlive any backward() through the returned tensor.
Tensor gcn_forward(Tape& tape, const GraphView& view, EncoderParams& params);

/// Plain evaluation path (no tape, no gradients); same arithmetic order as
/// gcn_forward.
Matrix encode(const NormalizedAdjacency& adj, const Matrix& features, const EncoderParams& params);

}  // namespace nap
