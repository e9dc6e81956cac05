#pragma once

#include "ttvos/heatmap.hpp"
#include "ttvos/label_map.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

struct LossConfig {
  double lambda_tc = 5.0;  // weight of the temporal-consistency term; >= 0
};

/// Mean pixel cross-entropy of 2-channel logits against a binary mask.
Tensor ce_loss(const Tensor& logits, const LabelMap& gt_mask);

/// Mean squared difference between predicted and target transition matrices.
Tensor tc_loss(const TransitionMatrix& predicted, const TransitionMatrix& target);

/// ce + lambda_tc * tc
Tensor total_loss(const Tensor& ce, const Tensor& tc, const LossConfig& cfg);

}  // namespace ttvos
