#pragma once

#include <cstddef>
#include <vector>

namespace ttvos {

/// Per-pixel integer labels, row-major. 0 is background, 1..N are objects.
/// A binary mask is a LabelMap whose values are all 0 or 1.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<int> labels;

  LabelMap() = default;
  LabelMap(std::size_t h, std::size_t w, int fill = 0) : height(h), width(w), labels(h * w, fill) {}

  int& at(std::size_t y, std::size_t x) { return labels[y * width + x]; }
  int at(std::size_t y, std::size_t x) const { return labels[y * width + x]; }
  std::size_t size() const { return labels.size(); }
  int max_label() const;
  bool is_binary() const;
  /// 1 where label == id, else 0.
  LabelMap indicator(int id) const;
  std::size_t count(int id) const;

  bool operator==(const LabelMap&) const = default;
};

/// Smallest axis-aligned box covering label `id`, filled with 1. Empty if
/// the label is absent.
LabelMap bounding_box_mask(const LabelMap& map, int id);

}  // namespace ttvos
