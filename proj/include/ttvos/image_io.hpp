#pragma once

#include <filesystem>

#include "ttvos/label_map.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

// Binary netpbm files with maxval 255. Images map bytes to [0,1] reals;
// label maps store the object id as the gray value.

Tensor read_ppm(const std::filesystem::path& path);
/// Values are clamped to [0,1] and rounded to the nearest byte.
void write_ppm(const std::filesystem::path& path, const Tensor& image);

LabelMap read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const LabelMap& labels);

}  // namespace ttvos
