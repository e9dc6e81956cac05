#pragma once

#include <cstddef>
#include <map>
#include <string>

namespace ttvos {

/// Channel widths and ablation switches of the segmentation network.
struct ModelConfig {
  std::size_t c4 = 16;     // backbone 1/4 tap
  std::size_t c8 = 24;     // backbone 1/8 tap; also the masked-feature width
  std::size_t c16 = 32;    // backbone 1/16 tap
  std::size_t c_st = 32;   // short-term template
  std::size_t c_sim = 16;  // similarity maps
  std::size_t c_tp = 32;   // long-term template (square matrix side)
  std::size_t c_dec = 32;  // decoder width
  std::size_t tp_groups = 4;
  double leaky_alpha = 0.01;

  // Ablation switches; all on (and box_init off) is the full model.
  bool short_matching = true;
  bool long_matching = true;
  bool template_update = true;
  bool box_init = false;

  static constexpr std::size_t kShuffle = 4;  // final pixel-shuffle factor

  /// Reduced widths for exhaustive finite-difference checks.
  static ModelConfig tiny();

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static ModelConfig from_map(const std::map<std::string, std::string>& kv);
  bool operator==(const ModelConfig&) const = default;
};

}  // namespace ttvos
