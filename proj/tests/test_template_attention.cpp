#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "ttvos/errors.hpp"
#include "ttvos/grad_check.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/template_attention.hpp"

using namespace ttvos;
using Branch = TemplateAttention::Branch;

namespace {

TemplateAttention make(const ModelConfig& cfg = {}, std::uint64_t seed = 1) {
  TemplateAttention t(cfg);
  Rng rng(seed);
  t.init(rng);
  return t;
}

Tensor row_stochastic(std::size_t n, std::mt19937_64& rng) {
  return softmax(oracle::random_tensor({n, n}, rng, -3, 3), 1);
}

// I = softmax_rows(F G^T) on [c, HW] operands.
Tensor embedding_oracle(const Tensor& f, const Tensor& g) {
  const std::size_t c = f.dim(0), n = f.dim(1);
  Tensor out({c, c});
  for (std::size_t i = 0; i < c; ++i) {
    std::vector<double> row(c);
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t k = 0; k < n; ++k) row[j] += f[i * n + k] * g[j * n + k];
    row = oracle::softmax_row(row);
    for (std::size_t j = 0; j < c; ++j) out.mutable_data()[i * c + j] = row[j];
  }
  return out;
}

}  // namespace

TEST(TemplateAttention, MaskedFeatureAndBranchShapes) {
  TemplateAttention t = make();
  std::mt19937_64 rng(2);
  MaskedFeature x = t.mask_feature(oracle::random_tensor({24, 8, 14}, rng),
                                   Heatmap::from_mask(LabelMap(64, 112, 1)));
  EXPECT_EQ(x.x.shape(), (Shape{24, 8, 14}));
  for (Branch b : {Branch::kF, Branch::kG, Branch::kQ})
    EXPECT_EQ(t.branch(x, b).shape(), (Shape{32, 8, 14}));
}

TEST(TemplateAttention, OnePixelHeatChangeStaysInItsReceptiveField) {
  TemplateAttention t = make();
  std::mt19937_64 rng(3);
  Tensor f8 = oracle::random_tensor({24, 6, 6}, rng);
  LabelMap a(48, 48), b(48, 48);
  b.at(20, 28) = 1;  // pooled cell (2, 3)
  Tensor xa = t.mask_feature(f8, Heatmap::from_mask(a)).x;
  Tensor xb = t.mask_feature(f8, Heatmap::from_mask(b)).x;
  for (std::size_t c = 0; c < 24; ++c)
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 6; ++x) {
        const bool inside = y >= 1 && y <= 3 && x >= 2 && x <= 4;
        if (!inside) EXPECT_EQ(xa[(c * 6 + y) * 6 + x], xb[(c * 6 + y) * 6 + x]);
      }
  EXPECT_GT(oracle::max_abs_diff(xa, xb), 0.0);
}

TEST(TemplateAttention, GroupedBranchEqualsBlockConvolutions) {
  TemplateAttention t = make();
  std::mt19937_64 rng(4);
  Tensor in = oracle::random_tensor({32, 5, 5}, rng);
  const Conv2d& g = t.grouped(Branch::kF);
  Tensor full = g.forward(in);
  std::vector<Tensor> parts;
  for (std::size_t k = 0; k < 4; ++k)
    parts.push_back(oracle::conv2d(narrow(in, 0, 8 * k, 8), narrow(g.weight, 0, 8 * k, 8),
                                   narrow(g.bias, 0, 8 * k, 8), 1, 2, 1));
  EXPECT_LT(oracle::max_abs_diff(full, concat(parts, 0)), 1e-12);
}

TEST(TemplateAttention, RejectsIndivisibleGroups) {
  ModelConfig cfg;
  cfg.c_tp = 30;
  EXPECT_THROW(TemplateAttention{cfg}, ConfigError);
}

TEST(TemplateAttention, IdentityGramGivesKnownEmbedding) {
  Tensor eye({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor i = softmax(matmul(eye, transpose(eye)), 1);
  EXPECT_NEAR(i[0], 0.7311, 1e-4);
  EXPECT_NEAR(i[1], 0.2689, 1e-4);
  EXPECT_NEAR(i[2], 0.2689, 1e-4);
  EXPECT_NEAR(i[3], 0.7311, 1e-4);
  EXPECT_LT(oracle::max_abs_diff(i, embedding_oracle(eye, eye)), 1e-15);
}

TEST(TemplateAttention, EmbeddingMatrixMatchesLoopOracle) {
  ModelConfig cfg = ModelConfig::tiny();
  TemplateAttention t = make(cfg, 5);
  std::mt19937_64 rng(6);
  MaskedFeature x{oracle::random_tensor({cfg.c8, 4, 4}, rng)};
  Tensor f = reshape(t.branch(x, Branch::kF), {cfg.c_tp, 16});
  Tensor g = reshape(t.branch(x, Branch::kG), {cfg.c_tp, 16});
  Tensor i = t.embedding_matrix(x).i;
  EXPECT_LT(oracle::max_abs_diff(i, embedding_oracle(f, g)), 1e-12);
  for (std::size_t r = 0; r < cfg.c_tp; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < cfg.c_tp; ++c) s += i[r * cfg.c_tp + c];
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(TemplateAttention, UpdateArithmetic) {
  Tensor i1({1, 1}, 0.5);
  LongTemplate t1 = TemplateAttention::first_template({i1});
  EXPECT_EQ(t1.count, 1u);
  EXPECT_EQ(t1.tp[0], 0.5);
  LongTemplate t2 = TemplateAttention::update_template(t1, {Tensor({1, 1}, 0.8)});
  EXPECT_EQ(t2.count, 2u);
  EXPECT_NEAR(t2.tp[0], 0.65, 1e-15);
  EXPECT_THROW(TemplateAttention::update_template({Tensor({1, 1}), 0}, {i1}), UsageError);
  EXPECT_THROW(TemplateAttention::update_template(t1, {Tensor({2, 2})}), DimensionError);
}

TEST(TemplateAttention, TemplateIsTheRunningMean) {
  std::mt19937_64 rng(7);
  std::vector<Tensor> history;
  for (int k = 0; k < 10; ++k) history.push_back(row_stochastic(6, rng));
  LongTemplate tp = TemplateAttention::first_template({history[0]});
  for (std::size_t k = 1; k < history.size(); ++k) tp = TemplateAttention::update_template(tp, {history[k]});
  EXPECT_EQ(tp.count, 10u);
  for (std::size_t e = 0; e < 36; ++e) {
    double mean = 0;
    for (const auto& h : history) mean += h[e];
    EXPECT_NEAR(tp.tp[e], mean / 10, 1e-12);
  }
  for (std::size_t r = 0; r < 6; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 6; ++c) s += tp.tp[r * 6 + c];
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(TemplateAttention, AttendKnownCases) {
  ModelConfig cfg = ModelConfig::tiny();
  TemplateAttention t = make(cfg, 8);
  std::mt19937_64 rng(9);
  MaskedFeature x{oracle::random_tensor({cfg.c8, 3, 4}, rng)};
  Tensor eye({cfg.c_tp, cfg.c_tp});
  for (std::size_t i = 0; i < cfg.c_tp; ++i) eye.mutable_data()[i * (cfg.c_tp + 1)] = 1;
  Attention a = t.attend({eye, 1}, x);
  EXPECT_EQ(oracle::max_abs_diff(a.a, t.branch(x, Branch::kQ)), 0.0);
  EXPECT_EQ(a.s_long.values.shape(), (Shape{cfg.c_sim, 3, 4}));
  EXPECT_EQ(a.s_long.kind, SimilarityMap::Kind::kLong);

  Tensor tp({2, 2}, std::vector<double>{0.6, 0.4, 0.4, 0.6});
  Tensor q({2, 1}, std::vector<double>{1, -1});
  Tensor prod = matmul(tp, q);
  EXPECT_NEAR(prod[0], 0.2, 1e-15);
  EXPECT_NEAR(prod[1], -0.2, 1e-15);

  EXPECT_THROW(t.attend({eye, 0}, x), UsageError);
}

TEST(TemplateAttention, AttendMatchesLoopOracle) {
  ModelConfig cfg = ModelConfig::tiny();
  TemplateAttention t = make(cfg, 10);
  std::mt19937_64 rng(11);
  MaskedFeature x{oracle::random_tensor({cfg.c8, 4, 4}, rng)};
  Tensor tp = row_stochastic(cfg.c_tp, rng);
  Tensor q = t.branch(x, Branch::kQ);
  Tensor a = t.attend({tp, 3}, x).a;
  for (std::size_t c = 0; c < cfg.c_tp; ++c)
    for (std::size_t p = 0; p < 16; ++p) {
      double s = 0;
      for (std::size_t k = 0; k < cfg.c_tp; ++k) s += tp[c * cfg.c_tp + k] * q[k * 16 + p];
      EXPECT_NEAR(a[c * 16 + p], s, 1e-12);
    }
}

TEST(TemplateAttention, LongTemplateSerializes) {
  std::mt19937_64 rng(12);
  LongTemplate t{row_stochastic(4, rng), 7};
  std::stringstream ss;
  t.write(ss);
  LongTemplate u = LongTemplate::read(ss);
  EXPECT_EQ(u.count, 7u);
  EXPECT_EQ(oracle::max_abs_diff(t.tp, u.tp), 0.0);
}

TEST(TemplateAttention, GradientThroughEmbeddingAndAttention) {
  ModelConfig cfg = ModelConfig::tiny();
  TemplateAttention t = make(cfg, 13);
  ParameterList ps;
  t.collect(ps);
  std::mt19937_64 rng(14);
  const Heatmap prev = Heatmap::from_mask(oracle::random_mask(32, 32, rng));
  const Heatmap cur = Heatmap::from_mask(oracle::random_mask(32, 32, rng));
  // Embedding from the previous frame, folded into a template, read by the current frame.
  auto rep = grad_check(
      [&](const std::vector<Tensor>& x) {
        EmbeddingMatrix i = t.embedding_matrix(t.mask_feature(x[0], prev));
        LongTemplate tp = TemplateAttention::update_template({x[2], 2}, i);
        Attention a = t.attend(tp, t.mask_feature(x[1], cur));
        return concat({reshape(a.a, {a.a.numel()}), reshape(a.s_long.values, {a.s_long.values.numel()})}, 0);
      },
      {oracle::random_tensor({cfg.c8, 4, 4}, rng), oracle::random_tensor({cfg.c8, 4, 4}, rng),
       row_stochastic(cfg.c_tp, rng)},
      ps);
  EXPECT_TRUE(rep.passed) << rep.max_rel_error << " " << rep.worst;
}

TEST(TemplateAttention, FallbackCollectsOnlyConcatLayers) {
  ModelConfig cfg;
  cfg.long_matching = false;
  TemplateAttention t = make(cfg);
  ParameterList ps;
  t.collect(ps);
  ASSERT_EQ(ps.size(), 4u);
  for (const auto& p : ps) EXPECT_TRUE(p.name.starts_with("tattn.concat")) << p.name;
  std::mt19937_64 rng(15);
  SimilarityMap s = t.concat_fallback(oracle::random_tensor({24, 4, 4}, rng), Heatmap::from_mask(LabelMap(32, 32, 1)));
  EXPECT_EQ(s.values.shape(), (Shape{16, 4, 4}));
}
