#include <gtest/gtest.h>

#include "oracles.hpp"
#include "ttvos/errors.hpp"
#include "ttvos/grad_check.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/short_term.hpp"

using namespace ttvos;

namespace {

ShortTermMatcher make(const ModelConfig& cfg = {}, std::uint64_t seed = 1) {
  ShortTermMatcher m(cfg);
  Rng rng(seed);
  m.init(rng);
  return m;
}

Heatmap flat_heat(std::size_t h, std::size_t w, int v) { return Heatmap::from_mask(LabelMap(h, w, v)); }

}  // namespace

TEST(ShortTerm, TemplateAndMatchShapes) {
  ShortTermMatcher m = make();
  std::mt19937_64 rng(2);
  Tensor f16 = oracle::random_tensor({32, 4, 7}, rng);
  ShortTemplate t = m.build_template(f16, flat_heat(64, 112, 1));
  EXPECT_EQ(t.embed.shape(), (Shape{32, 4, 7}));
  SimilarityMap s = m.match(t, f16);
  EXPECT_EQ(s.values.shape(), (Shape{16, 8, 14}));
  EXPECT_EQ(s.kind, SimilarityMap::Kind::kShort);
}

TEST(ShortTerm, MaskChannelReachesTheTemplate) {
  ShortTermMatcher m = make();
  std::mt19937_64 rng(3);
  Tensor f16 = oracle::random_tensor({32, 2, 2}, rng);
  ShortTemplate bg = m.build_template(f16, flat_heat(32, 32, 0));
  ShortTemplate fg = m.build_template(f16, flat_heat(32, 32, 1));
  EXPECT_GT(oracle::max_abs_diff(bg.embed, fg.embed), 1e-6);
}

TEST(ShortTerm, HeatmapExtentMustMatch) {
  ShortTermMatcher m = make();
  EXPECT_THROW(m.build_template(Tensor({32, 2, 2}), flat_heat(16, 32, 0)), DimensionError);
}

TEST(ShortTerm, ZeroTemplateGivesBiasResponse) {
  ShortTermMatcher m = make();
  std::mt19937_64 rng(4);
  Tensor f16 = oracle::random_tensor({32, 3, 3}, rng);
  Tensor corr = m.correlate({Tensor({32, 3, 3}), 0}, f16);
  for (double v : corr.data()) EXPECT_EQ(v, 0.0);
  SimilarityMap s = m.match({Tensor({32, 3, 3}), 0}, f16);
  const Tensor& bias = m.fuse().bias;
  for (std::size_t c = 0; c < 16; ++c)
    for (std::size_t i = 0; i < 36; ++i) EXPECT_NEAR(s.values[c * 36 + i], bias[c], 1e-15);
}

TEST(ShortTerm, CorrelationIsLinearInTheTemplate) {
  ShortTermMatcher m = make();
  std::mt19937_64 rng(5);
  Tensor f16 = oracle::random_tensor({32, 3, 4}, rng);
  Tensor tp = oracle::random_tensor({32, 3, 4}, rng);
  Tensor c1 = m.correlate({tp, 0}, f16);
  Tensor c3 = m.correlate({scale(tp, 3.0), 0}, f16);
  EXPECT_LT(oracle::max_abs_diff(c3, scale(c1, 3.0)), 1e-12);
}

TEST(ShortTerm, ShiftingBothFramesShiftsTheCorrelation) {
  ShortTermMatcher m = make();
  std::mt19937_64 rng(6);
  const std::size_t h = 6, w = 8;
  Tensor a = oracle::random_tensor({32, h, w}, rng), b = oracle::random_tensor({32, h, w}, rng);
  LabelMap mask(h * 16, w * 16);
  for (std::size_t y = 16; y < 64; ++y)
    for (std::size_t x = 16; x < 80; ++x) mask.at(y, x) = 1;
  // Shift one cell right (16 px at full resolution).
  auto shift = [&](const Tensor& t) {
    Tensor o(t.shape());
    auto d = o.mutable_data();
    for (std::size_t c = 0; c < 32; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 1; x < w; ++x) d[(c * h + y) * w + x] = t[(c * h + y) * w + x - 1];
    return o;
  };
  LabelMap mshift(h * 16, w * 16);
  for (std::size_t y = 0; y < h * 16; ++y)
    for (std::size_t x = 16; x < w * 16; ++x) mshift.at(y, x) = mask.at(y, x - 16);
  Tensor c0 = m.correlate(m.build_template(a, Heatmap::from_mask(mask)), b);
  Tensor c1 = m.correlate(m.build_template(shift(a), Heatmap::from_mask(mshift)), shift(b));
  // Interior cells: two cells from the left edge for the two stacked 3x3 convs, plus the shift.
  for (std::size_t c = 0; c < 32; ++c)
    for (std::size_t y = 2; y + 2 < h; ++y)
      for (std::size_t x = 3; x + 2 < w; ++x)
        EXPECT_NEAR(c1[(c * h + y) * w + x], c0[(c * h + y) * w + x - 1], 1e-12);
}

TEST(ShortTerm, FallbackShapeAndParameters) {
  ModelConfig cfg;
  cfg.short_matching = false;
  ShortTermMatcher m = make(cfg);
  ParameterList ps;
  m.collect(ps);
  for (const auto& p : ps) EXPECT_TRUE(p.name.starts_with("short.concat")) << p.name;
  std::mt19937_64 rng(7);
  SimilarityMap s = m.concat_fallback(oracle::random_tensor({32, 2, 3}, rng), flat_heat(32, 48, 1));
  EXPECT_EQ(s.values.shape(), (Shape{16, 4, 6}));
}

TEST(ShortTerm, GradientCheck) {
  const ModelConfig cfg = ModelConfig::tiny();
  ShortTermMatcher m = make(cfg, 8);
  ParameterList ps;
  m.collect(ps);
  std::mt19937_64 rng(9);
  const Heatmap heat = Heatmap::from_mask(oracle::random_mask(32, 32, rng));
  auto rep = grad_check(
      [&](const std::vector<Tensor>& x) { return m.match(m.build_template(x[0], heat), x[1]).values; },
      {oracle::random_tensor({cfg.c16, 2, 2}, rng), oracle::random_tensor({cfg.c16, 2, 2}, rng)}, ps);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error << " " << rep.worst;
}
