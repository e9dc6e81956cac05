#include "ttvos/backbone.hpp"

#include "ttvos/errors.hpp"
#include "ttvos/flop_counter.hpp"
#include "ttvos/ops.hpp"

namespace ttvos {

Backbone::Backbone(const ModelConfig& cfg)
    : alpha_(cfg.leaky_alpha),
      stem_("backbone.stem", 3, cfg.c4, 3, 2, 1),
      down4_("backbone.down4", cfg.c4, cfg.c4, 3, 2, 1),
      refine4_("backbone.refine4", cfg.c4, cfg.c4, 3, 1, 1),
      down8_("backbone.down8", cfg.c4, cfg.c8, 3, 2, 1),
      refine8_("backbone.refine8", cfg.c8, cfg.c8, 3, 1, 1),
      down16_("backbone.down16", cfg.c8, cfg.c16, 3, 2, 1),
      refine16_("backbone.refine16", cfg.c16, cfg.c16, 3, 1, 1) {}

void Backbone::init(Rng& rng) {
  for (Conv2d* c : {&stem_, &down4_, &refine4_, &down8_, &refine8_, &down16_, &refine16_}) {
    c->init(rng);
  }
}

FeaturePyramid Backbone::extract(const Tensor& image, int frame) const {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("backbone input must be [3,H,W], got " + shape_str(image.shape()));
  }
  if (image.dim(1) % 16 != 0 || image.dim(2) % 16 != 0) {
    throw ConfigError("frame extent " + std::to_string(image.dim(1)) + "x" +
                      std::to_string(image.dim(2)) + " is not divisible by 16");
  }
  ++calls_;
  StageScope tag(stage::kSeg);
  // The sequence of convs is padded so each stride-2 layer halves exactly.
  auto block = [this](const Conv2d& c, const Tensor& x) {
    return leaky_relu(c.forward(x), alpha_);
  };
  Tensor x = block(stem_, image);
  Tensor f4 = block(refine4_, block(down4_, x));
  Tensor f8 = block(refine8_, block(down8_, f4));
  Tensor f16 = block(refine16_, block(down16_, f8));
  return {f4, f8, f16, frame};
}

void Backbone::collect(ParameterList& out) const {
  for (const Conv2d* c : {&stem_, &down4_, &refine4_, &down8_, &refine8_, &down16_, &refine16_}) {
    c->collect(out);
  }
}

}  // namespace ttvos
