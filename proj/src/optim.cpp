#include "ttvos/optim.hpp"

#include <cmath>

#include "ttvos/errors.hpp"

namespace ttvos {

void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg) {
  if (param.size() != grad.size()) {
    throw DimensionError("adam_step: parameter has " + std::to_string(param.size()) +
                         " elements but gradient has " + std::to_string(grad.size()));
  }
  if (state.m.empty()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  } else if (state.m.size() != param.size()) {
    throw DimensionError("adam_step: optimizer state does not match parameter size");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

Adam::Adam(ParameterList params, AdamConfig cfg)
    : params_(std::move(params)), states_(params_.size()), cfg_(cfg) {
  check_unique_names(params_);
}

void Adam::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& t = params_[i].tensor;
    if (!t.has_grad()) continue;
    adam_step(t.mutable_data(), t.grad(), states_[i], cfg_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace ttvos
