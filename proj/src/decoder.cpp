#include "ttvos/decoder.hpp"

#include "ttvos/errors.hpp"
#include "ttvos/flop_counter.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/tape.hpp"

namespace ttvos {

Decoder::Decoder(const ModelConfig& cfg)
    : alpha_(cfg.leaky_alpha),
      merge_("decoder.merge", 2 * cfg.c_sim, cfg.c_dec, 3, 1, 1),
      up_("decoder.up", cfg.c_dec, cfg.c_dec, 2, 2),
      skip_("decoder.skip", cfg.c4, cfg.c_dec, 1),
      refine_("decoder.refine", cfg.c_dec, cfg.c_dec, 3, 1, 1),
      head_("decoder.head", cfg.c_dec, 2 * ModelConfig::kShuffle * ModelConfig::kShuffle, 3, 1,
            1) {}

void Decoder::init(Rng& rng) {
  merge_.init(rng);
  up_.init(rng);
  skip_.init(rng);
  refine_.init(rng);
  head_.init(rng);
}

void Decoder::collect(ParameterList& out) const {
  merge_.collect(out);
  up_.collect(out);
  skip_.collect(out);
  refine_.collect(out);
  head_.collect(out);
}

Heatmap Decoder::decode(const SimilarityMap& s_short, const SimilarityMap& s_long,
                        const Tensor& f4) const {
  const Tensor& a = s_short.values;
  const Tensor& b = s_long.values;
  if (a.rank() != 3 || b.rank() != 3 || f4.rank() != 3) {
    throw DimensionError("decoder inputs must be [C,H,W]");
  }
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw DimensionError("similarity maps differ in extent: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  if (f4.dim(1) != 2 * a.dim(1) || f4.dim(2) != 2 * a.dim(2)) {
    throw DimensionError("f4 " + shape_str(f4.shape()) +
                         " is not twice the similarity-map extent " + shape_str(a.shape()));
  }
  StageScope tag(stage::kDecode);
  Tensor x = up_.forward(merge_.forward(concat({a, b}, 0)));
  x = leaky_relu(refine_.forward(add(x, skip_.forward(f4))), alpha_);
  Tensor logits = pixel_shuffle(head_.forward(x), ModelConfig::kShuffle);
  return {softmax(logits, 0), logits};
}

TransitionHead::TransitionHead(const ModelConfig& cfg) : conv_("pihead.conv", cfg.c_sim, 2, 3, 1, 1) {}

void TransitionHead::init(Rng& rng) { conv_.init(rng); }

void TransitionHead::collect(ParameterList& out) const { conv_.collect(out); }

TransitionMatrix TransitionHead::forward(const SimilarityMap& s_long) const {
  return {conv_.forward(s_long.values)};
}

TransitionMatrix transition_target(const Heatmap& gt, const Heatmap& prev_estimate) {
  if (gt.probs.shape() != prev_estimate.probs.shape()) {
    throw DimensionError("transition target operands differ: " + shape_str(gt.probs.shape()) +
                         " vs " + shape_str(prev_estimate.probs.shape()));
  }
  NoTapeScope detached;
  const std::size_t h = gt.height() / 8, w = gt.width() / 8;
  return {sub(pool_heat(gt, 8, h, w), pool_heat(prev_estimate, 8, h, w)).detach()};
}

}  // namespace ttvos
