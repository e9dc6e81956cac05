#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "ttvos/aggregation.hpp"
#include "ttvos/errors.hpp"

using namespace ttvos;

namespace {

Tensor plane(double p, std::size_t h = 2, std::size_t w = 3) { return Tensor({h, w}, p); }

}  // namespace

TEST(SoftAggregate, HalfProbabilityIsATie) {
  ObjectDistribution d = soft_aggregate({plane(0.5)});
  EXPECT_EQ(d.probs.shape(), (Shape{2, 2, 3}));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(d.probs[i], 0.5, 1e-12);
    EXPECT_NEAR(d.probs[6 + i], 0.5, 1e-12);
  }
}

TEST(SoftAggregate, OddsOfPointEight) {
  ObjectDistribution d = soft_aggregate({plane(0.8, 1, 1)});
  EXPECT_NEAR(d.probs[0], 0.25 / 4.25, 1e-6);
  EXPECT_NEAR(d.probs[0], 0.0588, 1e-4);
  EXPECT_NEAR(d.probs[1], 0.9412, 1e-4);
}

TEST(SoftAggregate, NoObjectPixelIsBackground) {
  ObjectDistribution d = soft_aggregate({plane(0, 1, 1), plane(0, 1, 1)});
  EXPECT_GT(d.probs[0], 1 - 1e-6);
  EXPECT_LT(d.probs[1], 1e-6);
  EXPECT_LT(d.probs[2], 1e-6);
}

TEST(SoftAggregate, Errors) {
  EXPECT_THROW(soft_aggregate({}), UsageError);
  EXPECT_THROW(soft_aggregate({plane(0.1), plane(0.1, 3, 2)}), DimensionError);
  EXPECT_THROW(soft_aggregate({Tensor({1, 2, 2})}), DimensionError);
}

TEST(SoftAggregate, MatchesOracleAndSumsToOne) {
  std::mt19937_64 rng(1);
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<Tensor> ps;
    for (std::size_t j = 0; j < n; ++j) ps.push_back(oracle::random_tensor({5, 4}, rng, 0, 1));
    ObjectDistribution d = soft_aggregate(ps);
    for (std::size_t px = 0; px < 20; ++px) {
      std::vector<double> p;
      for (const auto& t : ps) p.push_back(t[px]);
      auto ref = oracle::aggregate_pixel(p);
      double s = 0;
      for (std::size_t j = 0; j <= n; ++j) {
        EXPECT_NEAR(d.probs[j * 20 + px], ref[j], 1e-12);
        EXPECT_GE(d.probs[j * 20 + px], 0.0);
        s += d.probs[j * 20 + px];
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(SoftAggregate, SingleObjectArgmaxFlipsAtOneHalf) {
  const std::size_t steps = 2001;
  Tensor p({1, steps});
  for (std::size_t i = 0; i < steps; ++i) p.mutable_data()[i] = double(i) / double(steps - 1);
  LabelMap l = argmax_labels(soft_aggregate({p}));
  for (std::size_t i = 0; i < steps; ++i) EXPECT_EQ(l.labels[i], p[i] > 0.5 ? 1 : 0) << p[i];
}

TEST(SoftAggregate, PermutingObjectsPermutesChannels) {
  std::mt19937_64 rng(2);
  std::vector<Tensor> ps;
  for (int j = 0; j < 4; ++j) ps.push_back(oracle::random_tensor({3, 3}, rng, 0, 1));
  std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<Tensor> qs;
  for (auto k : perm) qs.push_back(ps[k]);
  ObjectDistribution a = soft_aggregate(ps), b = soft_aggregate(qs);
  for (std::size_t px = 0; px < 9; ++px) {
    EXPECT_NEAR(a.probs[px], b.probs[px], 1e-15);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(b.probs[(j + 1) * 9 + px], a.probs[(perm[j] + 1) * 9 + px], 1e-15);
  }
}

TEST(ArgmaxLabels, TiesAndConcentration) {
  ObjectDistribution tie{Tensor({2, 1, 1}, 0.5)};
  EXPECT_EQ(argmax_labels(tie).labels[0], 0);
  ObjectDistribution two{Tensor({3, 1, 1}, std::vector<double>{0.1, 0.1, 0.8})};
  EXPECT_EQ(argmax_labels(two).labels[0], 2);
}

TEST(ArgmaxLabels, MatchesLoopOracle) {
  std::mt19937_64 rng(3);
  Tensor probs = oracle::random_tensor({4, 6, 5}, rng, 0, 1);
  LabelMap l = argmax_labels({probs});
  for (std::size_t px = 0; px < 30; ++px) {
    int best = 0;
    for (int j = 1; j < 4; ++j)
      if (probs[j * 30 + px] > probs[best * 30 + px]) best = j;
    EXPECT_EQ(l.labels[px], best);
  }
}
