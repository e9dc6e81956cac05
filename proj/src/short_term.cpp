#include "ttvos/short_term.hpp"

#include "ttvos/errors.hpp"
#include "ttvos/ops.hpp"

namespace ttvos {

ShortTermMatcher::ShortTermMatcher(const ModelConfig& cfg)
    : matching_(cfg.short_matching),
      alpha_(cfg.leaky_alpha),
      embed1_("short.embed1", cfg.c16 + 2, cfg.c_st, 3, 1, 1),
      embed2_("short.embed2", cfg.c_st, cfg.c_st, 3, 1, 1),
      project_("short.project", cfg.c16, cfg.c_st, 3, 1, 1),
      fuse_("short.fuse", cfg.c_st, cfg.c_sim, 1),
      concat1_("short.concat1", cfg.c16 + 2, cfg.c_st, 3, 1, 1),
      concat2_("short.concat2", cfg.c_st, cfg.c_sim, 3, 1, 1) {}

void ShortTermMatcher::init(Rng& rng) {
  if (matching_) {
    embed1_.init(rng);
    embed2_.init(rng);
    project_.init(rng);
    fuse_.init(rng);
  } else {
    concat1_.init(rng);
    concat2_.init(rng);
  }
}

void ShortTermMatcher::collect(ParameterList& out) const {
  if (matching_) {
    embed1_.collect(out);
    embed2_.collect(out);
    project_.collect(out);
    fuse_.collect(out);
  } else {
    concat1_.collect(out);
    concat2_.collect(out);
  }
}

Tensor ShortTermMatcher::with_heat(const Tensor& f16, const Heatmap& heat) const {
  if (f16.rank() != 3) throw DimensionError("f16 must be [C,H,W], got " + shape_str(f16.shape()));
  return concat({f16, pool_heat(heat, 16, f16.dim(1), f16.dim(2))}, 0);
}

ShortTemplate ShortTermMatcher::build_template(const Tensor& f16_prev, const Heatmap& heat_prev,
                                               int frame) const {
  Tensor x = leaky_relu(embed1_.forward(with_heat(f16_prev, heat_prev)), alpha_);
  return {leaky_relu(embed2_.forward(x), alpha_), frame};
}

Tensor ShortTermMatcher::correlate(const ShortTemplate& tpl, const Tensor& f16) const {
  Tensor query = project_.forward(f16);
  if (tpl.embed.shape() != query.shape()) {
    throw DimensionError("short template " + shape_str(tpl.embed.shape()) +
                         " is not aligned with projected f16 " + shape_str(query.shape()));
  }
  return mul(tpl.embed, query);
}

SimilarityMap ShortTermMatcher::match(const ShortTemplate& tpl, const Tensor& f16) const {
  Tensor fused = fuse_.forward(correlate(tpl, f16));
  return {bilinear_resize(fused, 2 * fused.dim(1), 2 * fused.dim(2)), SimilarityMap::Kind::kShort};
}

SimilarityMap ShortTermMatcher::concat_fallback(const Tensor& f16, const Heatmap& heat_prev) const {
  Tensor x = leaky_relu(concat1_.forward(with_heat(f16, heat_prev)), alpha_);
  x = leaky_relu(concat2_.forward(x), alpha_);
  return {bilinear_resize(x, 2 * x.dim(1), 2 * x.dim(2)), SimilarityMap::Kind::kShort};
}

}  // namespace ttvos
