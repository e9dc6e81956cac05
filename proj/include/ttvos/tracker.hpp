#pragma once

#include <string>
#include <vector>

#include "ttvos/aggregation.hpp"
#include "ttvos/model.hpp"

namespace ttvos {

/// Recurrent state of one tracked object.
struct ObjectState {
  int id = 0;
  Heatmap prev_heat;

  ShortTemplate short_tp;
  // Inputs the short template was built from.
  Tensor short_src_f16;
  Heatmap short_src_heat;

  LongTemplate long_tp;
  // Template before the most recent fold-in (undefined while count is 1)
  // and the inputs of that fold-in. Together they let a training step
  // rebuild long_tp on its own tape.
  Tensor long_prior;
  Tensor long_src_f8;
  Heatmap long_src_heat;
  std::uint64_t long_count = 0;
};

struct TrackerState {
  std::vector<ObjectState> objects;
  int frame = 0;  // frames consumed so far
  std::size_t height = 0, width = 0;
  std::vector<std::string> warnings;
};

struct StepOptions {
  /// Rebuild both templates on the active tape at the start of the step so
  /// their weights receive gradients, and skip the eager rebuild at the end.
  bool training = false;
  /// Also evaluate the transition head.
  bool predict_transition = false;
};

struct StepResult {
  LabelMap labels;
  ObjectDistribution dist;
  std::vector<Heatmap> heats;           // per-object decoder output, with logits
  std::vector<Heatmap> used_heats;      // recurrent heatmaps this step consumed
  std::vector<TransitionMatrix> pi_hat; // filled when predict_transition is set
};

/// Sequence-level driver: one backbone pass per frame, matching and
/// decoding per object, soft aggregation, then template refresh from the
/// aggregated probabilities.
class Tracker {
 public:
  explicit Tracker(const TtvosModel& model) : model_(model) {}

  /// Objects are labels 1..max_label of `gt`. An id with no pixels is kept
  /// with an all-background heatmap and a warning.
  TrackerState init(const Tensor& frame, const LabelMap& gt) const;
  StepResult step(TrackerState& state, const Tensor& frame, const StepOptions& opts = {}) const;

  /// Rebuilds short_tp and long_tp from their stored sources.
  void refresh_templates(ObjectState& obj, int frame) const;

 private:
  const TtvosModel& model_;
};

}  // namespace ttvos
