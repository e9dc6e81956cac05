#include "ttvos/tracker.hpp"

#include "ttvos/errors.hpp"
#include "ttvos/flop_counter.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/tape.hpp"

namespace ttvos {

namespace {

void check_frame(const Tensor& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw InputError("frame must be [3,H,W], got " + shape_str(frame.shape()));
  }
}

}  // namespace

void Tracker::refresh_templates(ObjectState& obj, int frame) const {
  const ModelConfig& cfg = model_.config();
  if (cfg.short_matching) {
    StageScope tag(stage::kSeg);
    obj.short_tp = model_.short_term.build_template(obj.short_src_f16, obj.short_src_heat, frame);
  }
  if (cfg.long_matching) {
    StageScope tag(stage::kUpdate);
    const TemplateAttention& att = model_.attention;
    EmbeddingMatrix i = att.embedding_matrix(att.mask_feature(obj.long_src_f8, obj.long_src_heat));
    obj.long_tp = obj.long_prior.defined()
                      ? TemplateAttention::update_template({obj.long_prior, obj.long_count - 1}, i)
                      : TemplateAttention::first_template(i);
  }
}

TrackerState Tracker::init(const Tensor& frame, const LabelMap& gt) const {
  check_frame(frame);
  if (gt.height != frame.dim(1) || gt.width != frame.dim(2)) {
    throw InputError("first-frame mask " + std::to_string(gt.height) + "x" +
                     std::to_string(gt.width) + " does not match frame " +
                     shape_str(frame.shape()));
  }
  const int n = gt.max_label();
  if (n < 1) throw InputError("first-frame mask has no objects");
  for (int v : gt.labels)
    if (v < 0) throw InputError("negative label in first-frame mask");

  NoTapeScope detached;
  TrackerState state;
  state.frame = 1;
  state.height = frame.dim(1);
  state.width = frame.dim(2);
  FeaturePyramid pyr = model_.backbone.extract(frame, 1);
  for (int id = 1; id <= n; ++id) {
    ObjectState obj;
    obj.id = id;
    if (gt.count(id) == 0) {
      state.warnings.push_back("object " + std::to_string(id) +
                               " has no pixels in the first frame; tracking it as background");
    }
    obj.prev_heat = Heatmap::from_mask(model_.config().box_init ? bounding_box_mask(gt, id)
                                                                : gt.indicator(id));
    obj.short_src_f16 = pyr.f16;
    obj.short_src_heat = obj.prev_heat;
    obj.long_src_f8 = pyr.f8;
    obj.long_src_heat = obj.prev_heat;
    obj.long_count = 1;
    refresh_templates(obj, 1);
    state.objects.push_back(std::move(obj));
  }
  return state;
}

StepResult Tracker::step(TrackerState& state, const Tensor& frame, const StepOptions& opts) const {
  if (state.objects.empty()) throw UsageError("tracker state is not initialized");
  check_frame(frame);
  if (frame.dim(1) != state.height || frame.dim(2) != state.width) {
    throw InputError("frame " + shape_str(frame.shape()) + " does not match the first frame " +
                     std::to_string(state.height) + "x" + std::to_string(state.width));
  }
  const ModelConfig& cfg = model_.config();
  const int t = state.frame + 1;
  FeaturePyramid pyr = model_.backbone.extract(frame, t);

  StepResult out;
  std::vector<Tensor> fg;
  for (ObjectState& obj : state.objects) {
    if (opts.training) refresh_templates(obj, t - 1);
    SimilarityMap s_short, s_long;
    {
      StageScope tag(stage::kSeg);
      s_short = cfg.short_matching ? model_.short_term.match(obj.short_tp, pyr.f16)
                                   : model_.short_term.concat_fallback(pyr.f16, obj.prev_heat);
      if (cfg.long_matching) {
        MaskedFeature x = model_.attention.mask_feature(pyr.f8, obj.prev_heat);
        s_long = model_.attention.attend(obj.long_tp, x).s_long;
      } else {
        s_long = model_.attention.concat_fallback(pyr.f8, obj.prev_heat);
      }
    }
    Heatmap heat = model_.decoder.decode(s_short, s_long, pyr.f4);
    if (opts.predict_transition) out.pi_hat.push_back(model_.pihead.forward(s_long));
    out.used_heats.push_back(obj.prev_heat);
    fg.push_back(heat.foreground());
    out.heats.push_back(std::move(heat));
  }

  NoTapeScope detached;
  out.dist = soft_aggregate(fg);
  out.labels = argmax_labels(out.dist);
  const std::size_t hw = state.height * state.width;
  auto dist = out.dist.probs.data();
  for (std::size_t k = 0; k < state.objects.size(); ++k) {
    ObjectState& obj = state.objects[k];
    Tensor q(Shape{state.height, state.width},
             std::vector<double>(dist.begin() + static_cast<long>((k + 1) * hw),
                                 dist.begin() + static_cast<long>((k + 2) * hw)));
    obj.prev_heat = Heatmap::from_foreground(q);
    obj.short_src_f16 = pyr.f16.detach();
    obj.short_src_heat = obj.prev_heat;
    const bool fold = cfg.long_matching && cfg.template_update;
    if (fold) {
      obj.long_prior = obj.long_tp.tp.detach();
      obj.long_src_f8 = pyr.f8.detach();
      obj.long_src_heat = obj.prev_heat;
      ++obj.long_count;
    }
    if (opts.training) {
      // Templates are rebuilt on the next step's tape; keep the counter honest.
      obj.long_tp.count = obj.long_count;
      continue;
    }
    if (cfg.short_matching) {
      StageScope tag(stage::kSeg);
      obj.short_tp = model_.short_term.build_template(obj.short_src_f16, obj.short_src_heat, t);
    }
    if (fold) {
      StageScope tag(stage::kUpdate);
      const TemplateAttention& att = model_.attention;
      EmbeddingMatrix i = att.embedding_matrix(att.mask_feature(obj.long_src_f8, obj.long_src_heat));
      obj.long_tp = TemplateAttention::update_template(obj.long_tp, i);
    }
  }
  state.frame = t;
  return out;
}

}  // namespace ttvos
