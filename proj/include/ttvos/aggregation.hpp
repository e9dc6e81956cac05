#pragma once

#include <vector>

#include "ttvos/label_map.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

/// Per-pixel distribution over {background, object 1..N}, [N+1, H, W].
struct ObjectDistribution {
  Tensor probs;
};

inline constexpr double kAggregationEps = 1e-7;

/// Background is the product of complements; each class contributes its
/// odds p/(1-p+eps) and the odds are normalized to sum to 1.
ObjectDistribution soft_aggregate(const std::vector<Tensor>& fg_probs);

/// Pointwise argmax; ties go to the lower index.
LabelMap argmax_labels(const ObjectDistribution& dist);

}  // namespace ttvos
