#pragma once

#include <vector>

#include "nap/encoder.hpp"
#include "nap/matrix.hpp"
#include "nap/tensor.hpp"

namespace nap {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Throws ConfigInvalid on lr <= 0, betas outside [0, 1), or eps <= 0.
void validate(const AdamConfig& cfg);

/// Per-parameter Adam accumulators. Order and shapes are fixed at
/// construction and must match the parameter list passed to every step.
struct OptimizerState {
  AdamConfig cfg;
  long long t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

OptimizerState make_optimizer(const std::vector<ParamTensor*>& params, const AdamConfig& cfg);

/// One bias-corrected Adam update, in place; clears every grad afterwards.
/// Throws MissingGrad if any parameter has no gradient.
void optimizer_step(const std::vector<ParamTensor*>& params, OptimizerState& state);

/// Convenience over all encoder parameters in their fixed order.
void optimizer_step(EncoderParams& params, OptimizerState& state);

}  // namespace nap
