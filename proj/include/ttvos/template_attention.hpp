#pragma once

#include <cstdint>
#include <iosfwd>

#include "ttvos/heatmap.hpp"
#include "ttvos/model_config.hpp"
#include "ttvos/nn.hpp"
#include "ttvos/short_term.hpp"

namespace ttvos {

/// Backbone f8 concatenated with a heatmap and projected back to c8 channels.
struct MaskedFeature {
  Tensor x;  // [c8, H/8, W/8]
};

/// Row-stochastic channel affinity, [c_tp, c_tp].
struct EmbeddingMatrix {
  Tensor i;
};

/// Running mean of the embedding matrices seen so far; `count` is the
/// number folded in.
struct LongTemplate {
  Tensor tp;  // [c_tp, c_tp]
  std::uint64_t count = 0;

  void write(std::ostream& os) const;
  static LongTemplate read(std::istream& is);
};

struct Attention {
  Tensor a;  // [c_tp, H/8, W/8]
  SimilarityMap s_long;
};

/// Long-term matching through a channel-attention template.
class TemplateAttention {
 public:
  enum class Branch { kF, kG, kQ };

  explicit TemplateAttention(const ModelConfig& cfg);

  void init(Rng& rng);
  void collect(ParameterList& out) const;

  MaskedFeature mask_feature(const Tensor& f8, const Heatmap& heat) const;
  /// Pointwise conv, LeakyReLU, then a grouped 5x5 conv.
  Tensor branch(const MaskedFeature& x, Branch which) const;
  /// softmax_rows(f(X) g(X)^T) with f, g flattened to [c_tp, HW].
  EmbeddingMatrix embedding_matrix(const MaskedFeature& x) const;
  Attention attend(const LongTemplate& tpl, const MaskedFeature& x) const;

  /// Template after the first frame: the embedding matrix itself.
  static LongTemplate first_template(const EmbeddingMatrix& i);
  /// TP_t = (t-1)/t TP_{t-1} + I/t with t = count + 1.
  static LongTemplate update_template(const LongTemplate& prev, const EmbeddingMatrix& i);

  /// Matching-free variant: f8 concatenated with the previous heatmap
  /// through two convs.
  SimilarityMap concat_fallback(const Tensor& f8, const Heatmap& heat_prev) const;

  bool matching() const { return matching_; }
  std::size_t template_size() const { return c_tp_; }

  const Conv2d& mask_conv() const { return mask_; }
  const Conv2d& pointwise(Branch b) const { return point_[index(b)]; }
  const Conv2d& grouped(Branch b) const { return group_[index(b)]; }
  const Conv2d& fusion() const { return fusion_; }
  const Conv2d& concat1() const { return concat1_; }
  const Conv2d& concat2() const { return concat2_; }

 private:
  static std::size_t index(Branch b) { return static_cast<std::size_t>(b); }
  Tensor with_heat(const Tensor& f8, const Heatmap& heat) const;

  bool matching_;
  double alpha_;
  std::size_t c_tp_;
  Conv2d mask_;
  Conv2d point_[3];
  Conv2d group_[3];
  Conv2d fusion_;
  Conv2d concat1_, concat2_;
};

}  // namespace ttvos
