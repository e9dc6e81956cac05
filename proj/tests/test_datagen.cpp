#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "ttvos/datagen.hpp"
#include "ttvos/errors.hpp"

using namespace ttvos;
namespace fs = std::filesystem;

namespace {

std::pair<double, double> centroid(const LabelMap& m, int id = 1) {
  double sy = 0, sx = 0, n = 0;
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x)
      if (m.at(y, x) == id) sy += y, sx += x, ++n;
  return {sy / n, sx / n};
}

LabelMap disk(std::size_t h, std::size_t w, double cy, double cx, double r) {
  LabelMap m(h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m.at(y, x) = 1;
  return m;
}

}  // namespace

TEST(AffineClip, IdentityRangesCopyTheInput) {
  std::mt19937_64 rng(1);
  Tensor img = oracle::random_tensor({3, 32, 48}, rng, 0, 1);
  LabelMap mask = disk(32, 48, 16, 20, 7);
  Clip c = gen_affine_clip(img, mask, 4, AffineRanges::identity(), 3);
  ASSERT_EQ(c.length(), 4u);
  for (std::size_t t = 0; t < 4; ++t) {
    EXPECT_LT(oracle::max_abs_diff(c.frames[t], img), 1e-12);
    EXPECT_EQ(c.masks[t], mask);
  }
}

TEST(AffineClip, TranslationMovesTheCentroid) {
  std::mt19937_64 rng(2);
  Tensor img = oracle::random_tensor({3, 64, 112}, rng, 0, 1);
  LabelMap mask = disk(64, 112, 30, 30, 9);
  AffineParams step;
  step.translate_x = 8.0 / 112.0;
  Clip c = affine_clip_from_steps(img, mask, {step, step, step});
  for (std::size_t t = 1; t < 4; ++t) {
    auto [y0, x0] = centroid(c.masks[t - 1]);
    auto [y1, x1] = centroid(c.masks[t]);
    EXPECT_NEAR(x1 - x0, 8.0, 0.5);
    EXPECT_NEAR(y1 - y0, 0.0, 0.5);
  }
}

TEST(AffineClip, WarpedMaskIsTheWarpedIndicator) {
  std::mt19937_64 rng(3);
  Tensor img = oracle::random_tensor({3, 32, 32}, rng, 0, 1);
  LabelMap mask = disk(32, 32, 15, 15, 6);
  for (int& v : mask.labels) v *= 3;
  Clip a = gen_affine_clip(img, mask, 3, AffineRanges{}, 9);
  Clip b = gen_affine_clip(img, mask.indicator(3), 3, AffineRanges{}, 9);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(a.masks[t].indicator(3), b.masks[t]);
}

TEST(AffineClip, SeededAndValidated) {
  std::mt19937_64 rng(4);
  Tensor img = oracle::random_tensor({3, 32, 32}, rng, 0, 1);
  LabelMap mask = disk(32, 32, 15, 15, 6);
  Clip a = gen_affine_clip(img, mask, 3, AffineRanges{}, 11), b = gen_affine_clip(img, mask, 3, AffineRanges{}, 11);
  Clip c = gen_affine_clip(img, mask, 3, AffineRanges{}, 12);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(oracle::max_abs_diff(a.frames[t], b.frames[t]), 0.0);
    EXPECT_EQ(a.masks[t], b.masks[t]);
  }
  EXPECT_GT(oracle::max_abs_diff(a.frames[2], c.frames[2]), 0.0);
  EXPECT_THROW(gen_affine_clip(img, LabelMap(16, 32), 3, AffineRanges{}, 1), InputError);
}

TEST(ShapeClip, StaticShapeKeepsItsMask) {
  ShapeScene s;
  s.objects.push_back(ShapeSpec{});
  s.objects[0].cx = 40;
  s.objects[0].cy = 30;
  Clip c = render_shape_clip(s, 5);
  EXPECT_GT(c.masks[0].count(1), 100u);
  for (std::size_t t = 1; t < 5; ++t) EXPECT_EQ(c.masks[t], c.masks[0]);
}

TEST(ShapeClip, LaterObjectsOccludeEarlierOnes) {
  ShapeScene s;
  ShapeSpec a, b;
  a.cx = 30, a.cy = 32, a.vx = 6, a.rx = a.ry = 10;
  b.cx = 80, b.cy = 32, b.vx = -6, b.rx = b.ry = 10;
  s.objects = {a, b};
  Clip c = render_shape_clip(s, 8);
  // The centers meet around frame 5 (1-based) near x = 55.
  bool overlapped = false;
  for (std::size_t t = 0; t < 8; ++t) {
    const double ca = 30 + 6.0 * t, cb = 80 - 6.0 * t;
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x < 112; ++x) {
        const double dy = y - 32.0;
        const bool in_a = (x - ca) * (x - ca) + dy * dy < 81, in_b = (x - cb) * (x - cb) + dy * dy < 81;
        if (in_a && in_b) {
          overlapped = true;
          EXPECT_EQ(c.masks[t].at(y, x), 2);
        }
      }
  }
  EXPECT_TRUE(overlapped);
}

TEST(ShapeClip, LabelsAreValidAndSeeded) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 1 + seed % 3;
    Clip c = gen_shape_clip(6, n, 64, 112, seed);
    ASSERT_EQ(c.length(), 6u);
    EXPECT_EQ(c.objects(), int(n));
    for (int id = 1; id <= int(n); ++id) EXPECT_GT(c.masks[0].count(id), 0u);
    for (const auto& m : c.masks) {
      EXPECT_EQ(m.height, 64u);
      for (int v : m.labels) EXPECT_TRUE(v >= 0 && v <= int(n));
    }
    for (const auto& f : c.frames)
      for (double v : f.data()) ASSERT_TRUE(v >= 0 && v <= 1);
    Clip d = gen_shape_clip(6, n, 64, 112, seed);
    EXPECT_EQ(oracle::max_abs_diff(c.frames[5], d.frames[5]), 0.0);
    EXPECT_EQ(c.masks[5], d.masks[5]);
  }
}

TEST(Sequences, WriteReadRoundTrip) {
  const fs::path root = fs::temp_directory_path() / "ttvos_test_seqs";
  fs::remove_all(root);
  Clip c = gen_shape_clip(3, 2, 32, 48, 5);
  write_sequence(root / "b", c);
  write_sequence(root / "a", c);
  fs::create_directories(root / "junk");
  EXPECT_EQ(list_sequences(root), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(fs::exists(root / "a" / "frames" / "00000.ppm"));
  EXPECT_TRUE(fs::exists(root / "a" / "masks" / "00002.pgm"));
  Clip r = read_sequence(root / "a");
  ASSERT_EQ(r.length(), 3u);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_EQ(r.masks[t], c.masks[t]);
    EXPECT_LE(oracle::max_abs_diff(r.frames[t], c.frames[t]), 0.5 / 255 + 1e-12);
  }
  fs::remove_all(root);
}
