#pragma once

// Naive reference implementations. They share nothing with the library
// beyond the Tensor/LabelMap containers.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "ttvos/label_map.hpp"
#include "ttvos/tensor.hpp"

namespace oracle {

using ttvos::LabelMap;
using ttvos::Shape;
using ttvos::Tensor;

inline Tensor random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(s));
  for (double& v : t.mutable_data()) v = u(rng);
  return t;
}

inline LabelMap random_mask(std::size_t h, std::size_t w, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  LabelMap m(h, w);
  for (int& v : m.labels) v = b(rng) ? 1 : 0;
  return m;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride,
                     std::size_t pad, std::size_t groups) {
  const long cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const long cout = w.dim(0), k = w.dim(2);
  const long cin_g = cin / groups, cout_g = cout / groups;
  const long oh = (h + 2 * long(pad) - k) / long(stride) + 1;
  const long ow = (wd + 2 * long(pad) - k) / long(stride) + 1;
  Tensor out(Shape{std::size_t(cout), std::size_t(oh), std::size_t(ow)});
  auto o = out.mutable_data();
  for (long co = 0; co < cout; ++co) {
    const long g = co / cout_g;
    for (long y = 0; y < oh; ++y)
      for (long xo = 0; xo < ow; ++xo) {
        double s = b[co];
        for (long ci = 0; ci < cin_g; ++ci)
          for (long i = 0; i < k; ++i)
            for (long j = 0; j < k; ++j) {
              const long iy = y * long(stride) + i - long(pad);
              const long ix = xo * long(stride) + j - long(pad);
              if (iy < 0 || ix < 0 || iy >= h || ix >= wd) continue;
              s += w[((co * cin_g + ci) * k + i) * k + j] * x[((g * cin_g + ci) * h + iy) * wd + ix];
            }
        o[(co * oh + y) * ow + xo] = s;
      }
  }
  return out;
}

// Scatter form: every input pixel stamps the kernel into the output.
inline Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b,
                               std::size_t stride, std::size_t pad) {
  const long cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const long cout = w.dim(1), k = w.dim(2);
  const long oh = (h - 1) * long(stride) - 2 * long(pad) + k;
  const long ow = (wd - 1) * long(stride) - 2 * long(pad) + k;
  Tensor out(Shape{std::size_t(cout), std::size_t(oh), std::size_t(ow)});
  auto o = out.mutable_data();
  for (long co = 0; co < cout; ++co)
    for (long i = 0; i < oh * ow; ++i) o[co * oh * ow + i] = b[co];
  for (long ci = 0; ci < cin; ++ci)
    for (long y = 0; y < h; ++y)
      for (long xi = 0; xi < wd; ++xi)
        for (long co = 0; co < cout; ++co)
          for (long i = 0; i < k; ++i)
            for (long j = 0; j < k; ++j) {
              const long oy = y * long(stride) + i - long(pad);
              const long ox = xi * long(stride) + j - long(pad);
              if (oy < 0 || ox < 0 || oy >= oh || ox >= ow) continue;
              o[(co * oh + oy) * ow + ox] +=
                  x[(ci * h + y) * wd + xi] * w[((ci * cout + co) * k + i) * k + j];
            }
  return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out(Shape{m, n});
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      o[i * n + j] = s;
    }
  return out;
}

inline std::vector<double> softmax_row(std::vector<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double& x : v) s += (x = std::exp(x - m));
  for (double& x : v) x /= s;
  return v;
}

// Half-pixel centers, no corner alignment, clamped at the borders.
inline double bilinear_at(const Tensor& x, std::size_t c, double sy, double sx) {
  const long h = x.dim(1), w = x.dim(2);
  sy = std::max(sy, 0.0);
  sx = std::max(sx, 0.0);
  long y0 = std::min(long(std::floor(sy)), h - 1), x0 = std::min(long(std::floor(sx)), w - 1);
  long y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const double fy = std::min(sy - y0, 1.0), fx = std::min(sx - x0, 1.0);
  auto v = [&](long y, long xx) { return x[(c * h + y) * w + xx]; };
  return (1 - fy) * ((1 - fx) * v(y0, x0) + fx * v(y0, x1)) + fy * ((1 - fx) * v(y1, x0) + fx * v(y1, x1));
}

inline std::set<std::pair<int, int>> pixels(const LabelMap& m) {
  std::set<std::pair<int, int>> s;
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x)
      if (m.at(y, x)) s.insert({int(y), int(x)});
  return s;
}

inline double jaccard(const LabelMap& a, const LabelMap& b) {
  auto pa = pixels(a), pb = pixels(b);
  std::set<std::pair<int, int>> inter, uni = pa;
  for (auto p : pb) {
    if (pa.count(p)) inter.insert(p);
    uni.insert(p);
  }
  return uni.empty() ? 1.0 : double(inter.size()) / double(uni.size());
}

inline std::set<std::pair<int, int>> boundary(const LabelMap& m) {
  std::set<std::pair<int, int>> s;
  const int h = int(m.height), w = int(m.width);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!m.at(y, x)) continue;
      bool edge = y == 0 || x == 0 || y == h - 1 || x == w - 1;
      if (!edge) edge = !m.at(y - 1, x) || !m.at(y + 1, x) || !m.at(y, x - 1) || !m.at(y, x + 1);
      if (edge) s.insert({y, x});
    }
  return s;
}

// Fraction of `from` points within Euclidean distance r of some `to` point.
inline double matched_fraction(const std::set<std::pair<int, int>>& from,
                               const std::set<std::pair<int, int>>& to, int r) {
  if (from.empty()) return 0.0;
  std::size_t hit = 0;
  for (auto [y, x] : from) {
    for (auto [v, u] : to)
      if ((y - v) * (y - v) + (x - u) * (x - u) <= r * r) {
        ++hit;
        break;
      }
  }
  return double(hit) / double(from.size());
}

inline double boundary_f(const LabelMap& pred, const LabelMap& gt) {
  auto bp = boundary(pred), bg = boundary(gt);
  if (bp.empty() && bg.empty()) return 1.0;
  if (bp.empty() || bg.empty()) return 0.0;
  const int r = int(std::ceil(0.008 * std::sqrt(double(pred.height * pred.height + pred.width * pred.width))));
  const double p = matched_fraction(bp, bg, r), rc = matched_fraction(bg, bp, r);
  return p + rc == 0.0 ? 0.0 : 2 * p * rc / (p + rc);
}

// Odds normalization with product-of-complements background.
inline std::vector<double> aggregate_pixel(const std::vector<double>& p, double eps = 1e-7) {
  double bg = 1.0;
  for (double v : p) bg *= 1.0 - v;
  std::vector<double> odds{bg / (1.0 - bg + eps)};
  for (double v : p) odds.push_back(v / (1.0 - v + eps));
  double s = 0.0;
  for (double o : odds) s += o;
  for (double& o : odds) o /= s;
  return odds;
}

}  // namespace oracle
