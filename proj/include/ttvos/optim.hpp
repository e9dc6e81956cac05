#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ttvos/nn.hpp"

namespace ttvos {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of `param` in place. Moments are
/// zero-initialized on the first call.
void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
               const AdamConfig& cfg);

class Adam {
 public:
  Adam(ParameterList params, AdamConfig cfg);

  /// Updates every parameter that holds a gradient; parameters never reached
  /// by backward are left alone, as is their state.
  void step();
  void zero_grad();
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  ParameterList params_;
  std::vector<AdamState> states_;
  AdamConfig cfg_;
};

}  // namespace ttvos
