#pragma once

#include "ttvos/heatmap.hpp"
#include "ttvos/model_config.hpp"
#include "ttvos/nn.hpp"
#include "ttvos/short_term.hpp"

namespace ttvos {

/// Fuses both similarity maps with f4 and upsamples to a full-resolution
/// two-channel heatmap:
///   merge(k3) -> up(convT k2 s2) -> + skip(f4) -> refine(k3)+LeakyReLU
///   -> head(k3, 2*r*r) -> pixel_shuffle(r) -> softmax over channels
class Decoder {
 public:
  explicit Decoder(const ModelConfig& cfg);

  void init(Rng& rng);
  void collect(ParameterList& out) const;

  Heatmap decode(const SimilarityMap& s_short, const SimilarityMap& s_long,
                 const Tensor& f4) const;

  const Conv2d& merge() const { return merge_; }
  const ConvTranspose2d& up() const { return up_; }
  const Conv2d& skip() const { return skip_; }
  const Conv2d& refine() const { return refine_; }
  const Conv2d& head() const { return head_; }

 private:
  double alpha_;
  Conv2d merge_;
  ConvTranspose2d up_;
  Conv2d skip_, refine_, head_;
};

/// Predicts the transition matrix from the long-term similarity map with a
/// single 3x3 conv. Used only while training.
class TransitionHead {
 public:
  explicit TransitionHead(const ModelConfig& cfg);

  void init(Rng& rng);
  void collect(ParameterList& out) const;
  TransitionMatrix forward(const SimilarityMap& s_long) const;

  const Conv2d& conv() const { return conv_; }

 private:
  Conv2d conv_;
};

/// pool8(H_t) - pool8(H_prev), carrying no gradient.
TransitionMatrix transition_target(const Heatmap& gt, const Heatmap& prev_estimate);

}  // namespace ttvos
