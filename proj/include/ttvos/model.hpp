#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "ttvos/backbone.hpp"
#include "ttvos/decoder.hpp"
#include "ttvos/model_config.hpp"
#include "ttvos/short_term.hpp"
#include "ttvos/template_attention.hpp"

namespace ttvos {

/// All trainable parts of the segmentation network. Branches switched off
/// by the configuration contribute no parameters.
class TtvosModel {
 public:
  explicit TtvosModel(const ModelConfig& cfg = {});
  TtvosModel(const TtvosModel&) = delete;
  TtvosModel& operator=(const TtvosModel&) = delete;

  void init(std::uint64_t seed);
  const ModelConfig& config() const { return cfg_; }

  /// Handles to every parameter in a fixed order; names are unique.
  ParameterList parameters() const;

  /// Writes the parameter checkpoint plus config.txt.
  void save(const std::filesystem::path& dir) const;
  static std::unique_ptr<TtvosModel> load(const std::filesystem::path& dir);

  Backbone backbone;
  ShortTermMatcher short_term;
  TemplateAttention attention;
  Decoder decoder;
  TransitionHead pihead;

 private:
  ModelConfig cfg_;
};

}  // namespace ttvos
