#include "ttvos/grad_suite.hpp"

#include <random>

#include "ttvos/datagen.hpp"
#include "ttvos/losses.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/tape.hpp"
#include "ttvos/tracker.hpp"

namespace ttvos {

namespace {

class Source {
 public:
  explicit Source(std::uint64_t seed) : rng_(seed) {}

  Tensor normal(Shape s) {
    std::normal_distribution<double> n;
    Tensor t(std::move(s));
    for (double& v : t.mutable_data()) v = n(rng_);
    return t;
  }

  LabelMap mask(std::size_t h, std::size_t w) {
    std::bernoulli_distribution b(0.4);
    LabelMap m(h, w);
    for (int& v : m.labels) v = b(rng_) ? 1 : 0;
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

Tensor flat(const Tensor& t) { return reshape(t, {t.numel()}); }

Tensor joined(const std::vector<Tensor>& parts) {
  std::vector<Tensor> flats;
  for (const auto& p : parts) flats.push_back(flat(p));
  return concat(flats, 0);
}

ParameterList params_of(const auto& module) {
  ParameterList out;
  module.collect(out);
  return out;
}

}  // namespace

std::vector<GradSuiteRow> run_grad_suite(const GradCheckOptions& opts) {
  const ModelConfig cfg = ModelConfig::tiny();
  TtvosModel model(cfg);
  model.init(opts.seed);
  Source src(opts.seed + 1);
  std::vector<GradSuiteRow> rows;
  auto run = [&](const std::string& name, const Block& b, std::vector<Tensor> in,
                 const ParameterList& ps) { rows.push_back({name, grad_check(b, std::move(in), ps, opts)}); };

  run("backbone",
      [&](const std::vector<Tensor>& x) {
        FeaturePyramid p = model.backbone.extract(x[0]);
        return joined({p.f4, p.f8, p.f16});
      },
      {src.normal({3, 16, 32})}, params_of(model.backbone));

  const Heatmap heat32 = Heatmap::from_mask(src.mask(32, 32));
  run("short_term",
      [&](const std::vector<Tensor>& x) {
        return model.short_term.match(model.short_term.build_template(x[0], heat32), x[1]).values;
      },
      {src.normal({cfg.c16, 2, 2}), src.normal({cfg.c16, 2, 2})}, params_of(model.short_term));

  const TemplateAttention& att = model.attention;
  ParameterList embed_params{};
  for (const Conv2d* c : {&att.mask_conv(), &att.pointwise(TemplateAttention::Branch::kF),
                          &att.grouped(TemplateAttention::Branch::kF),
                          &att.pointwise(TemplateAttention::Branch::kG),
                          &att.grouped(TemplateAttention::Branch::kG)})
    c->collect(embed_params);
  run("template_attention.embedding",
      [&](const std::vector<Tensor>& x) {
        return att.embedding_matrix(att.mask_feature(x[0], heat32)).i;
      },
      {src.normal({cfg.c8, 4, 4})}, embed_params);

  ParameterList attend_params;
  for (const Conv2d* c : {&att.mask_conv(), &att.pointwise(TemplateAttention::Branch::kQ),
                          &att.grouped(TemplateAttention::Branch::kQ), &att.fusion()})
    c->collect(attend_params);
  run("template_attention.attend",
      [&](const std::vector<Tensor>& x) {
        Attention a = att.attend({x[0], 1}, att.mask_feature(x[1], heat32));
        return joined({a.a, a.s_long.values});
      },
      {softmax(src.normal({cfg.c_tp, cfg.c_tp}), 1), src.normal({cfg.c8, 4, 4})}, attend_params);

  run("template_attention.update",
      [&](const std::vector<Tensor>& x) {
        return TemplateAttention::update_template({x[0], 3}, {x[1]}).tp;
      },
      {src.normal({cfg.c_tp, cfg.c_tp}), src.normal({cfg.c_tp, cfg.c_tp})}, {});

  run("decoder",
      [&](const std::vector<Tensor>& x) {
        Heatmap h = model.decoder.decode({x[0]}, {x[1]}, x[2]);
        return joined({h.probs, h.logits});
      },
      {src.normal({cfg.c_sim, 2, 2}), src.normal({cfg.c_sim, 2, 2}), src.normal({cfg.c4, 4, 4})},
      params_of(model.decoder));

  run("transition_head",
      [&](const std::vector<Tensor>& x) { return model.pihead.forward({x[0]}).pi; },
      {src.normal({cfg.c_sim, 4, 4})}, params_of(model.pihead));

  const LabelMap gt8 = src.mask(8, 8);
  const TransitionMatrix target{scale(src.normal({2, 2, 2}), 0.3)};
  run("ce_loss", [&](const std::vector<Tensor>& x) { return ce_loss(x[0], gt8); },
      {src.normal({2, 8, 8})}, {});
  run("tc_loss", [&](const std::vector<Tensor>& x) { return tc_loss({x[0]}, target); },
      {src.normal({2, 2, 2})}, {});
  run("total_loss",
      [&](const std::vector<Tensor>& x) {
        return total_loss(ce_loss(x[0], gt8), tc_loss({x[1]}, target), LossConfig{});
      },
      {src.normal({2, 8, 8}), src.normal({2, 2, 2})}, {});

  // One recurrent training step from a frozen state: every parameter at once.
  Clip clip = gen_shape_clip(3, 1, 32, 32, opts.seed);
  Tracker tracker(model);
  TrackerState state = tracker.init(clip.frames[0], clip.masks[0]);
  {
    NoTapeScope no_tape;
    tracker.step(state, clip.frames[1], {true, true});
  }
  const LabelMap gt = clip.masks[2].indicator(1);
  run("tracker.step",
      [&](const std::vector<Tensor>&) {
        TrackerState s = state;
        StepResult r = tracker.step(s, clip.frames[2], {true, true});
        Tensor ce = ce_loss(r.heats[0].logits, gt);
        Tensor tc = tc_loss(r.pi_hat[0], transition_target(Heatmap::from_mask(gt), r.used_heats[0]));
        return total_loss(ce, tc, LossConfig{});
      },
      {}, model.parameters());
  return rows;
}

}  // namespace ttvos
