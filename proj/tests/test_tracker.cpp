#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ttvos/datagen.hpp"
#include "ttvos/errors.hpp"
#include "ttvos/heatmap.hpp"
#include "ttvos/tracker.hpp"

using namespace ttvos;

namespace {

void expect_state_invariants(const TrackerState& s, bool update = true) {
  for (const auto& o : s.objects) {
    EXPECT_TRUE(is_valid_heatmap(o.prev_heat));
    EXPECT_EQ(o.long_tp.count, update ? std::uint64_t(s.frame) : 1u);
    EXPECT_EQ(o.long_count, o.long_tp.count);
  }
}

}  // namespace

TEST(Tracker, InitSingleObject) {
  TtvosModel m;
  m.init(1);
  Clip c = gen_shape_clip(2, 1, 64, 112, 3);
  TrackerState s = Tracker(m).init(c.frames[0], c.masks[0]);
  ASSERT_EQ(s.objects.size(), 1u);
  EXPECT_EQ(s.frame, 1);
  EXPECT_EQ(s.objects[0].long_tp.count, 1u);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Tracker, ThreeObjectsShareOnePyramid) {
  TtvosModel m;
  m.init(2);
  Clip c = gen_shape_clip(4, 3, 64, 112, 4);
  Tracker tr(m);
  const std::size_t before = m.backbone.calls();
  TrackerState s = tr.init(c.frames[0], c.masks[0]);
  ASSERT_EQ(s.objects.size(), 3u);
  EXPECT_EQ(m.backbone.calls(), before + 1);
  for (std::size_t t = 1; t < 4; ++t) {
    StepResult r = tr.step(s, c.frames[t]);
    EXPECT_EQ(m.backbone.calls(), before + 1 + t);
    EXPECT_EQ(r.dist.probs.shape(), (Shape{4, 64, 112}));
    EXPECT_LE(r.labels.max_label(), 3);
    expect_state_invariants(s);
  }
  for (int id = 1; id <= 3; ++id) EXPECT_EQ(s.objects[id - 1].id, id);
}

TEST(Tracker, InitAndStepAreDeterministic) {
  TtvosModel m;
  m.init(3);
  Clip c = gen_shape_clip(3, 2, 64, 112, 5);
  Tracker tr(m);
  TrackerState a = tr.init(c.frames[0], c.masks[0]), b = tr.init(c.frames[0], c.masks[0]);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(oracle::max_abs_diff(a.objects[k].short_tp.embed, b.objects[k].short_tp.embed), 0.0);
    EXPECT_EQ(oracle::max_abs_diff(a.objects[k].long_tp.tp, b.objects[k].long_tp.tp), 0.0);
  }
  for (std::size_t t = 1; t < 3; ++t) {
    StepResult ra = tr.step(a, c.frames[t]), rb = tr.step(b, c.frames[t]);
    EXPECT_EQ(ra.labels, rb.labels);
    EXPECT_EQ(oracle::max_abs_diff(ra.dist.probs, rb.dist.probs), 0.0);
  }
}

TEST(Tracker, SingleObjectLabelsFollowTheRawHeatmap) {
  TtvosModel m;
  m.init(4);
  Clip c = gen_shape_clip(4, 1, 64, 112, 6);
  Tracker tr(m);
  TrackerState s = tr.init(c.frames[0], c.masks[0]);
  for (std::size_t t = 1; t < 4; ++t) {
    StepResult r = tr.step(s, c.frames[t]);
    const std::size_t n = 64 * 112;
    for (std::size_t i = 0; i < n; ++i)
      ASSERT_EQ(r.labels.labels[i], r.heats[0].probs[n + i] > 0.5 ? 1 : 0) << i;
  }
}

TEST(Tracker, LongTemplateIsTheMeanOfItsEmbeddings) {
  TtvosModel m;
  m.init(5);
  Clip c = gen_shape_clip(6, 2, 64, 112, 7);
  Tracker tr(m);
  TrackerState s = tr.init(c.frames[0], c.masks[0]);
  const TemplateAttention& att = m.attention;
  auto current_i = [&](const ObjectState& o) {
    return att.embedding_matrix(att.mask_feature(o.long_src_f8, o.long_src_heat)).i;
  };
  std::vector<std::vector<Tensor>> history(2);
  for (std::size_t k = 0; k < 2; ++k) history[k].push_back(current_i(s.objects[k]));
  for (std::size_t t = 1; t < 6; ++t) {
    tr.step(s, c.frames[t]);
    for (std::size_t k = 0; k < 2; ++k) {
      history[k].push_back(current_i(s.objects[k]));
      const Tensor& tp = s.objects[k].long_tp.tp;
      for (std::size_t e = 0; e < tp.numel(); ++e) {
        double mean = 0;
        for (const auto& i : history[k]) mean += i[e];
        ASSERT_NEAR(tp[e], mean / double(history[k].size()), 1e-12);
      }
    }
  }
}

TEST(Tracker, FrozenTemplateKeepsItsCount) {
  ModelConfig cfg;
  cfg.template_update = false;
  TtvosModel m(cfg);
  m.init(6);
  Clip c = gen_shape_clip(4, 1, 64, 112, 8);
  Tracker tr(m);
  TrackerState s = tr.init(c.frames[0], c.masks[0]);
  const Tensor first = s.objects[0].long_tp.tp;
  for (std::size_t t = 1; t < 4; ++t) tr.step(s, c.frames[t]);
  expect_state_invariants(s, false);
  EXPECT_EQ(oracle::max_abs_diff(first, s.objects[0].long_tp.tp), 0.0);
}

TEST(Tracker, EmptyObjectIsTrackedAsBackground) {
  TtvosModel m;
  m.init(7);
  Clip c = gen_shape_clip(2, 1, 64, 112, 9);
  LabelMap gt = c.masks[0];
  for (int& v : gt.labels)
    if (v == 1) v = 2;
  TrackerState s = Tracker(m).init(c.frames[0], gt);
  ASSERT_EQ(s.objects.size(), 2u);
  ASSERT_EQ(s.warnings.size(), 1u);
  for (std::size_t i = 0; i < 64 * 112; ++i) EXPECT_EQ(s.objects[0].prev_heat.probs[i], 1.0);
}

TEST(Tracker, Errors) {
  TtvosModel m;
  m.init(8);
  Tracker tr(m);
  Clip c = gen_shape_clip(2, 1, 64, 112, 10);
  EXPECT_THROW(tr.init(c.frames[0], LabelMap(64, 112)), InputError);
  EXPECT_THROW(tr.init(c.frames[0], LabelMap(32, 112, 1)), InputError);
  TrackerState s = tr.init(c.frames[0], c.masks[0]);
  EXPECT_THROW(tr.step(s, Tensor({3, 32, 112})), InputError);
  TrackerState empty;
  EXPECT_THROW(tr.step(empty, c.frames[1]), UsageError);
}

TEST(Tracker, BoxInitUsesTheBoundingBox) {
  ModelConfig cfg;
  cfg.box_init = true;
  TtvosModel m(cfg);
  m.init(9);
  Clip c = gen_shape_clip(2, 1, 64, 112, 11);
  TrackerState s = Tracker(m).init(c.frames[0], c.masks[0]);
  LabelMap box = bounding_box_mask(c.masks[0], 1);
  const std::size_t n = 64 * 112;
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(s.objects[0].prev_heat.probs[n + i], double(box.labels[i]));
}
