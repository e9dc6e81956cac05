#pragma once

#include "ttvos/heatmap.hpp"
#include "ttvos/model_config.hpp"
#include "ttvos/nn.hpp"

namespace ttvos {

/// Embedding of the previous frame's 1/16 features and heatmap.
struct ShortTemplate {
  Tensor embed;  // [c_st, H/16, W/16]
  int frame = 0;
};

struct SimilarityMap {
  enum class Kind { kShort, kLong };
  Tensor values;  // [c_sim, H/8, W/8]
  Kind kind = Kind::kShort;
};

/// Localization branch: a template built from (f16_{t-1}, heat_{t-1}) is
/// correlated channel-wise with the projected f16_t, fused pointwise and
/// upsampled to 1/8.
class ShortTermMatcher {
 public:
  explicit ShortTermMatcher(const ModelConfig& cfg);

  void init(Rng& rng);
  void collect(ParameterList& out) const;

  ShortTemplate build_template(const Tensor& f16_prev, const Heatmap& heat_prev,
                               int frame = 0) const;
  /// Depth-wise correlation before fusion, [c_st, H/16, W/16].
  Tensor correlate(const ShortTemplate& tpl, const Tensor& f16) const;
  SimilarityMap match(const ShortTemplate& tpl, const Tensor& f16) const;

  /// Matching-free variant: the current f16 concatenated with the previous
  /// heatmap through two convs, then upsampled.
  SimilarityMap concat_fallback(const Tensor& f16, const Heatmap& heat_prev) const;

  bool matching() const { return matching_; }
  const Conv2d& embed1() const { return embed1_; }
  const Conv2d& embed2() const { return embed2_; }
  const Conv2d& project() const { return project_; }
  const Conv2d& fuse() const { return fuse_; }
  const Conv2d& concat1() const { return concat1_; }
  const Conv2d& concat2() const { return concat2_; }

 private:
  Tensor with_heat(const Tensor& f16, const Heatmap& heat) const;

  bool matching_;
  double alpha_;
  Conv2d embed1_, embed2_, project_, fuse_;
  Conv2d concat1_, concat2_;
};

}  // namespace ttvos
