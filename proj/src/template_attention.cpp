#include "ttvos/template_attention.hpp"

#include "ttvos/errors.hpp"
#include "ttvos/flop_counter.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/serialize.hpp"

namespace ttvos {

namespace {
const char* kBranchNames[3] = {"f", "g", "q"};
}

void LongTemplate::write(std::ostream& os) const {
  write_tensor(os, tp);
  write_u64(os, count);
}

LongTemplate LongTemplate::read(std::istream& is) {
  LongTemplate t;
  t.tp = read_tensor(is);
  t.count = read_u64(is);
  return t;
}

TemplateAttention::TemplateAttention(const ModelConfig& cfg)
    : matching_(cfg.long_matching),
      alpha_(cfg.leaky_alpha),
      c_tp_(cfg.c_tp),
      mask_("tattn.mask", cfg.c8 + 2, cfg.c8, 3, 1, 1),
      fusion_("tattn.fusion", cfg.c_tp + cfg.c8, cfg.c_sim, 3, 1, 1),
      concat1_("tattn.concat1", cfg.c8 + 2, cfg.c8, 3, 1, 1),
      concat2_("tattn.concat2", cfg.c8, cfg.c_sim, 3, 1, 1) {
  if (cfg.c_tp % cfg.tp_groups != 0) {
    throw ConfigError("template size " + std::to_string(cfg.c_tp) +
                      " is not divisible by the group count " + std::to_string(cfg.tp_groups));
  }
  for (std::size_t b = 0; b < 3; ++b) {
    const std::string prefix = std::string("tattn.") + kBranchNames[b];
    point_[b] = Conv2d(prefix + ".point", cfg.c8, cfg.c_tp, 1);
    group_[b] = Conv2d(prefix + ".group", cfg.c_tp, cfg.c_tp, 5, 1, 2, cfg.tp_groups);
  }
}

void TemplateAttention::init(Rng& rng) {
  if (!matching_) {
    concat1_.init(rng);
    concat2_.init(rng);
    return;
  }
  mask_.init(rng);
  for (std::size_t b = 0; b < 3; ++b) {
    point_[b].init(rng);
    group_[b].init(rng);
  }
  fusion_.init(rng);
}

void TemplateAttention::collect(ParameterList& out) const {
  if (!matching_) {
    concat1_.collect(out);
    concat2_.collect(out);
    return;
  }
  mask_.collect(out);
  for (std::size_t b = 0; b < 3; ++b) {
    point_[b].collect(out);
    group_[b].collect(out);
  }
  fusion_.collect(out);
}

Tensor TemplateAttention::with_heat(const Tensor& f8, const Heatmap& heat) const {
  if (f8.rank() != 3) throw DimensionError("f8 must be [C,H,W], got " + shape_str(f8.shape()));
  return concat({f8, pool_heat(heat, 8, f8.dim(1), f8.dim(2))}, 0);
}

MaskedFeature TemplateAttention::mask_feature(const Tensor& f8, const Heatmap& heat) const {
  return {leaky_relu(mask_.forward(with_heat(f8, heat)), alpha_)};
}

Tensor TemplateAttention::branch(const MaskedFeature& x, Branch which) const {
  const std::size_t b = index(which);
  return group_[b].forward(leaky_relu(point_[b].forward(x.x), alpha_));
}

EmbeddingMatrix TemplateAttention::embedding_matrix(const MaskedFeature& x) const {
  StageScope tag(stage::kUpdate);
  const std::size_t hw = x.x.dim(1) * x.x.dim(2);
  Tensor f = reshape(branch(x, Branch::kF), {c_tp_, hw});
  Tensor g = reshape(branch(x, Branch::kG), {c_tp_, hw});
  return {softmax(matmul(f, transpose(g)), 1)};
}

Attention TemplateAttention::attend(const LongTemplate& tpl, const MaskedFeature& x) const {
  if (tpl.count < 1) throw UsageError("long template has not been initialized");
  if (tpl.tp.shape() != Shape{c_tp_, c_tp_}) {
    throw DimensionError("long template must be " + shape_str({c_tp_, c_tp_}) + ", got " +
                         shape_str(tpl.tp.shape()));
  }
  const std::size_t h = x.x.dim(1), w = x.x.dim(2);
  Tensor a;
  {
    StageScope tag(stage::kRead);
    Tensor q = reshape(branch(x, Branch::kQ), {c_tp_, h * w});
    a = reshape(matmul(tpl.tp, q), {c_tp_, h, w});
  }
  StageScope tag(stage::kSeg);
  Tensor s = leaky_relu(fusion_.forward(concat({a, x.x}, 0)), alpha_);
  return {a, {s, SimilarityMap::Kind::kLong}};
}

LongTemplate TemplateAttention::first_template(const EmbeddingMatrix& i) { return {i.i, 1}; }

LongTemplate TemplateAttention::update_template(const LongTemplate& prev,
                                                const EmbeddingMatrix& i) {
  if (prev.count < 1) throw UsageError("long template has not been initialized");
  if (prev.tp.shape() != i.i.shape()) {
    throw DimensionError("template " + shape_str(prev.tp.shape()) +
                         " and embedding matrix " + shape_str(i.i.shape()) + " differ");
  }
  StageScope tag(stage::kUpdate);
  const double t = static_cast<double>(prev.count + 1);
  return {add(scale(prev.tp, (t - 1.0) / t), scale(i.i, 1.0 / t)), prev.count + 1};
}

SimilarityMap TemplateAttention::concat_fallback(const Tensor& f8, const Heatmap& heat_prev) const {
  Tensor x = leaky_relu(concat1_.forward(with_heat(f8, heat_prev)), alpha_);
  return {leaky_relu(concat2_.forward(x), alpha_), SimilarityMap::Kind::kLong};
}

}  // namespace ttvos
