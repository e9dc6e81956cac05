#pragma once

#include <atomic>

#include "ttvos/model_config.hpp"
#include "ttvos/nn.hpp"

namespace ttvos {

/// Backbone features of one frame at 1/4, 1/8 and 1/16 of the input extent.
struct FeaturePyramid {
  Tensor f4;
  Tensor f8;
  Tensor f16;
  int frame = 0;

  FeaturePyramid detach() const { return {f4.detach(), f8.detach(), f16.detach(), frame}; }
};

/// Strided convolutional trunk with a refinement conv at each tap:
///   stem(3->c4, s2) -> down4(c4->c4, s2) -> refine4 => f4
///   -> down8(c4->c8, s2) -> refine8 => f8 -> down16(c8->c16, s2) -> refine16 => f16
/// Every conv is 3x3 followed by LeakyReLU.
class Backbone {
 public:
  explicit Backbone(const ModelConfig& cfg);

  void init(Rng& rng);
  FeaturePyramid extract(const Tensor& image, int frame = 0) const;
  void collect(ParameterList& out) const;

  /// Number of extract() calls so far; lets the tracker prove it runs the
  /// trunk once per frame.
  std::size_t calls() const { return calls_.load(); }

  const Conv2d& stem() const { return stem_; }
  const Conv2d& down4() const { return down4_; }
  const Conv2d& refine4() const { return refine4_; }
  const Conv2d& down8() const { return down8_; }
  const Conv2d& refine8() const { return refine8_; }
  const Conv2d& down16() const { return down16_; }
  const Conv2d& refine16() const { return refine16_; }

 private:
  double alpha_;
  Conv2d stem_, down4_, refine4_, down8_, refine8_, down16_, refine16_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace ttvos
