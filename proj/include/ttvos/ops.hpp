#pragma once

#include <cstddef>
#include <vector>

#include "ttvos/tensor.hpp"

namespace ttvos {

// Differentiable tensor operations. Spatial maps are [C, H, W]; there is no
// batch axis. Every op records itself on the active tape when an input
// requires a gradient and reports its FLOPs to the active counter.

/// Cross-correlation with zero padding.
/// input [C_in,H,W], weight [C_out, C_in/groups, k, k], bias [C_out].
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              std::size_t stride = 1, std::size_t padding = 0, std::size_t groups = 1);

/// Adjoint of conv2d with respect to its input, plus bias.
/// input [C_in,H,W], weight [C_in, C_out, k, k], bias [C_out];
/// output extent (H-1)*stride - 2*padding + k.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        std::size_t stride = 1, std::size_t padding = 0);

/// out[c, h*r+i, w*r+j] = in[c*r*r + i*r + j, h, w]
Tensor pixel_shuffle(const Tensor& input, std::size_t r);

Tensor softmax(const Tensor& input, std::size_t axis);
Tensor leaky_relu(const Tensor& input, double alpha = 0.01);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Slice [start, start+length) along `axis`.
Tensor narrow(const Tensor& input, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& input, Shape shape);

/// Non-overlapping k x k mean pooling; H and W must be divisible by k.
Tensor avg_pool2d(const Tensor& input, std::size_t k);
/// Half-pixel sampling without corner alignment; source coordinates below
/// zero clamp to the first sample.
Tensor bilinear_resize(const Tensor& input, std::size_t out_h, std::size_t out_w);

Tensor sum(const Tensor& input);
Tensor mean(const Tensor& input);

/// Mean over pixels of -log softmax(logits)[label] for logits [C,H,W].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Records the sign pattern of every leaky_relu input while active. Used by
/// the gradient checker to discard finite-difference stencils that straddle
/// a kink.
class KinkRecorder {
 public:
  KinkRecorder();
  ~KinkRecorder();
  KinkRecorder(const KinkRecorder&) = delete;
  KinkRecorder& operator=(const KinkRecorder&) = delete;

  const std::vector<bool>& pattern() const { return pattern_; }
  void reset() { pattern_.clear(); }
  void append(std::span<const double> values);

 private:
  std::vector<bool> pattern_;
  KinkRecorder* previous_;
};

}  // namespace ttvos
