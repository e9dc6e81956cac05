#pragma once

#include "ttvos/label_map.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

/// Two-channel per-object probability map: channel 0 background,
/// channel 1 foreground, summing to 1 at every pixel.
struct Heatmap {
  Tensor probs;   // [2, H, W]
  Tensor logits;  // [2, H, W]; undefined for heatmaps built from masks

  static Heatmap from_mask(const LabelMap& binary);
  /// (1 - p, p) from a foreground probability plane [H, W] or [1, H, W].
  static Heatmap from_foreground(const Tensor& fg);

  std::size_t height() const { return probs.dim(1); }
  std::size_t width() const { return probs.dim(2); }
  Tensor foreground() const;  // [H, W], detached copy
};

/// True when probs is [2,H,W] with entries in [0,1] summing to 1 within tol.
bool is_valid_heatmap(const Heatmap& h, double tol = 1e-9);

/// Average-pools heat.probs by `factor` and checks the result is h x w.
/// Throws DimensionError when the heatmap is not at factor x that extent.
Tensor pool_heat(const Heatmap& heat, std::size_t factor, std::size_t h, std::size_t w);

/// Per-pixel signed change target or its prediction, [2, H/8, W/8].
struct TransitionMatrix {
  Tensor pi;
};

}  // namespace ttvos
