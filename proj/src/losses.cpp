#include "ttvos/losses.hpp"

#include "ttvos/errors.hpp"
#include "ttvos/ops.hpp"

namespace ttvos {

Tensor ce_loss(const Tensor& logits, const LabelMap& gt_mask) {
  if (!gt_mask.is_binary()) throw InputError("cross-entropy target mask is not binary");
  if (logits.rank() != 3 || logits.dim(0) != 2) {
    throw DimensionError("logits must be [2,H,W], got " + shape_str(logits.shape()));
  }
  if (logits.dim(1) != gt_mask.height || logits.dim(2) != gt_mask.width) {
    throw DimensionError("logits " + shape_str(logits.shape()) + " do not match mask " +
                         std::to_string(gt_mask.height) + "x" + std::to_string(gt_mask.width));
  }
  return cross_entropy(logits, gt_mask.labels);
}

Tensor tc_loss(const TransitionMatrix& predicted, const TransitionMatrix& target) {
  if (predicted.pi.shape() != target.pi.shape()) {
    throw DimensionError("transition matrices differ: " + shape_str(predicted.pi.shape()) +
                         " vs " + shape_str(target.pi.shape()));
  }
  Tensor diff = sub(predicted.pi, target.pi.detach());
  return mean(mul(diff, diff));
}

Tensor total_loss(const Tensor& ce, const Tensor& tc, const LossConfig& cfg) {
  if (cfg.lambda_tc < 0) throw ConfigError("lambda_tc must be >= 0");
  if (cfg.lambda_tc == 0) return ce;
  return add(ce, scale(tc, cfg.lambda_tc));
}

}  // namespace ttvos
