#include "nap/adam.hpp"

#include <cmath>
#include <string>

#include "nap/errors.hpp"

namespace nap {

void validate(const AdamConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigInvalid("lr must be positive");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigInvalid("beta1 must be in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigInvalid("beta2 must be in [0, 1)");
  if (!(cfg.eps > 0.0)) throw ConfigInvalid("eps must be positive");
}

OptimizerState make_optimizer(const std::vector<ParamTensor*>& params, const AdamConfig& cfg) {
  validate(cfg);
  OptimizerState s;
  s.cfg = cfg;
  for (const ParamTensor* p : params) {
    s.m.emplace_back(p->value.rows, p->value.cols);
    s.v.emplace_back(p->value.rows, p->value.cols);
  }
  return s;
}

void optimizer_step(const std::vector<ParamTensor*>& params, OptimizerState& state) {
  if (params.size() != state.m.size())
    throw ShapeMismatch("optimizer built for " + std::to_string(state.m.size()) +
                        " parameters, got " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i]->grad) throw MissingGrad("parameter " + std::to_string(i));

  state.t += 1;
  const AdamConfig& c = state.cfg;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (!p.value.same_shape(m)) throw ShapeMismatch("parameter " + std::to_string(i) + " shape");
    const Matrix& g = *p.grad;
    for (std::size_t k = 0; k < p.value.data.size(); ++k) {
      const double gk = g.data[k];
      m.data[k] = c.beta1 * m.data[k] + (1.0 - c.beta1) * gk;
      v.data[k] = c.beta2 * v.data[k] + (1.0 - c.beta2) * gk * gk;
      const double mh = m.data[k] / bc1;
      const double vh = v.data[k] / bc2;
      p.value.data[k] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
    p.grad.reset();
  }
}

void optimizer_step(EncoderParams& params, OptimizerState& state) {
  optimizer_step(all_params(params), state);
}

}  // namespace nap
