#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ttvos/nn.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  /// Denominator floor of the relative error, so that near-zero gradient
  /// components are compared in absolute terms at this scale.
  double denominator_floor = 1e-3;
  std::uint64_t seed = 1234;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// Coordinates whose stencil crossed a LeakyReLU kink; excluded.
  std::size_t skipped_kinks = 0;
  std::string worst;  // "<name>[index]" of the worst coordinate
  bool passed = false;
};

using Block = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares reverse-mode gradients with central finite differences for
/// every element of every input and parameter.
///
/// The block output is reduced to a scalar by a fixed random projection so
/// all output elements contribute. Relative error per coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, denominator_floor).
/// Never throws on mismatch; the report carries the verdict.
GradCheckReport grad_check(const Block& block, std::vector<Tensor> inputs,
                           const ParameterList& params, const GradCheckOptions& opts = {});

}  // namespace ttvos
