#include "ttvos/label_map.hpp"

#include <algorithm>
#include <cmath>

#include "ttvos/errors.hpp"
#include "ttvos/heatmap.hpp"
#include "ttvos/ops.hpp"

namespace ttvos {

int LabelMap::max_label() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

bool LabelMap::is_binary() const {
  return std::all_of(labels.begin(), labels.end(), [](int v) { return v == 0 || v == 1; });
}

LabelMap LabelMap::indicator(int id) const {
  LabelMap out(height, width);
  for (std::size_t i = 0; i < labels.size(); ++i) out.labels[i] = labels[i] == id ? 1 : 0;
  return out;
}

std::size_t LabelMap::count(int id) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), id));
}

LabelMap bounding_box_mask(const LabelMap& map, int id) {
  LabelMap out(map.height, map.width);
  std::size_t y0 = map.height, y1 = 0, x0 = map.width, x1 = 0;
  bool any = false;
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x)
      if (map.at(y, x) == id) {
        any = true;
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  if (!any) return out;
  for (std::size_t y = y0; y <= y1; ++y)
    for (std::size_t x = x0; x <= x1; ++x) out.at(y, x) = 1;
  return out;
}

Heatmap Heatmap::from_mask(const LabelMap& binary) {
  if (!binary.is_binary()) throw InputError("heatmap source mask is not binary");
  const std::size_t hw = binary.size();
  std::vector<double> v(2 * hw);
  for (std::size_t i = 0; i < hw; ++i) {
    v[hw + i] = binary.labels[i] ? 1.0 : 0.0;
    v[i] = 1.0 - v[hw + i];
  }
  return Heatmap{Tensor(Shape{2, binary.height, binary.width}, std::move(v)), Tensor()};
}

Heatmap Heatmap::from_foreground(const Tensor& fg) {
  std::size_t h = 0, w = 0;
  if (fg.rank() == 2) {
    h = fg.dim(0);
    w = fg.dim(1);
  } else if (fg.rank() == 3 && fg.dim(0) == 1) {
    h = fg.dim(1);
    w = fg.dim(2);
  } else {
    throw DimensionError("foreground plane must be [H,W] or [1,H,W], got " +
                         shape_str(fg.shape()));
  }
  const std::size_t hw = h * w;
  auto p = fg.data();
  std::vector<double> v(2 * hw);
  for (std::size_t i = 0; i < hw; ++i) {
    v[hw + i] = p[i];
    v[i] = 1.0 - p[i];
  }
  return Heatmap{Tensor(Shape{2, h, w}, std::move(v)), Tensor()};
}

Tensor Heatmap::foreground() const {
  const std::size_t h = height(), w = width();
  auto p = probs.data();
  return Tensor(Shape{h, w}, std::vector<double>(p.begin() + static_cast<long>(h * w), p.end()));
}

bool is_valid_heatmap(const Heatmap& h, double tol) {
  if (!h.probs.defined() || h.probs.rank() != 3 || h.probs.dim(0) != 2) return false;
  const std::size_t hw = h.probs.dim(1) * h.probs.dim(2);
  auto p = h.probs.data();
  for (std::size_t i = 0; i < hw; ++i) {
    const double b = p[i], f = p[hw + i];
    if (b < -tol || f < -tol || b > 1 + tol || f > 1 + tol) return false;
    if (std::abs(b + f - 1.0) > tol) return false;
  }
  return true;
}

Tensor pool_heat(const Heatmap& heat, std::size_t factor, std::size_t h, std::size_t w) {
  if (!heat.probs.defined() || heat.probs.rank() != 3 || heat.probs.dim(0) != 2) {
    throw DimensionError("heatmap must be [2,H,W]");
  }
  if (heat.height() != h * factor || heat.width() != w * factor) {
    throw DimensionError("heatmap " + shape_str(heat.probs.shape()) + " is not " +
                         std::to_string(factor) + "x the feature extent " + std::to_string(h) +
                         "x" + std::to_string(w));
  }
  return avg_pool2d(heat.probs, factor);
}

}  // namespace ttvos
