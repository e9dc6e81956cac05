#include "ttvos/aggregation.hpp"

#include "ttvos/errors.hpp"

namespace ttvos {

ObjectDistribution soft_aggregate(const std::vector<Tensor>& fg_probs) {
  if (fg_probs.empty()) throw UsageError("soft_aggregate needs at least one object");
  const Shape plane = fg_probs.front().shape();
  if (plane.size() != 2) {
    throw DimensionError("foreground planes must be [H,W], got " + shape_str(plane));
  }
  for (const auto& p : fg_probs) {
    if (p.shape() != plane) {
      throw DimensionError("foreground planes differ: " + shape_str(plane) + " vs " +
                           shape_str(p.shape()));
    }
  }
  const std::size_t n = fg_probs.size(), hw = plane[0] * plane[1];
  std::vector<double> out((n + 1) * hw);
  std::vector<double> odds(n + 1);
  for (std::size_t px = 0; px < hw; ++px) {
    double background = 1.0;
    for (std::size_t j = 0; j < n; ++j) background *= 1.0 - fg_probs[j][px];
    odds[0] = background / (1.0 - background + kAggregationEps);
    double total = odds[0];
    for (std::size_t j = 0; j < n; ++j) {
      const double p = fg_probs[j][px];
      odds[j + 1] = p / (1.0 - p + kAggregationEps);
      total += odds[j + 1];
    }
    for (std::size_t j = 0; j <= n; ++j) out[j * hw + px] = odds[j] / total;
  }
  return {Tensor(Shape{n + 1, plane[0], plane[1]}, std::move(out))};
}

LabelMap argmax_labels(const ObjectDistribution& dist) {
  const Tensor& p = dist.probs;
  if (p.rank() != 3) throw DimensionError("distribution must be [N+1,H,W]");
  const std::size_t classes = p.dim(0), h = p.dim(1), w = p.dim(2), hw = h * w;
  LabelMap out(h, w);
  auto v = p.data();
  for (std::size_t px = 0; px < hw; ++px) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c)
      if (v[c * hw + px] > v[best * hw + px]) best = c;
    out.labels[px] = static_cast<int>(best);
  }
  return out;
}

}  // namespace ttvos
