#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ttvos/datagen.hpp"
#include "ttvos/losses.hpp"
#include "ttvos/metrics.hpp"
#include "ttvos/model.hpp"
#include "ttvos/optim.hpp"

namespace ttvos {

struct TrainConfig {
  enum class Stage { kPretrain, kMain };
  Stage stage = Stage::kMain;
  std::size_t clip_length = 8;  // 3 for pretraining
  std::size_t batch = 1;        // clips accumulated per optimizer step
  double lr = 1e-4;
  std::size_t epochs = 10;
  double lambda_tc = 5.0;
  std::uint64_t seed = 1;
  AffineRanges affine;  // pretraining clip motion

  static TrainConfig for_stage(Stage s);
  void validate() const;
};

struct ClipStats {
  double loss = 0.0;  // mean over supervised frames and objects
  double ce = 0.0;
  double tc = 0.0;
  double mean_j = 0.0;  // of the emitted labels on frames 2..T
  std::size_t frames = 0;
  std::size_t max_tape_nodes = 0;
  bool skipped = false;
  std::string warning;
};

/// Forward and backward over one clip. Frame 1 initializes the tracker from
/// its ground truth; frames 2..T each build their own tape, so no gradient
/// crosses a frame boundary. Gradients accumulate into the parameters;
/// the caller steps the optimizer. Losses are scaled by 1/(frames*objects)
/// so the accumulated gradient is that of the clip mean.
/// Throws NumericError (after dumping diagnostics to stderr) on a
/// non-finite loss.
ClipStats train_clip(const TtvosModel& model, const Clip& clip, const LossConfig& loss_cfg);

/// Runs the tracker over a clip and returns predicted label maps (frame 1
/// is the ground truth as given).
std::vector<LabelMap> track_clip(const TtvosModel& model, const Clip& clip,
                                 std::vector<std::string>* warnings = nullptr);

EvalReport evaluate_clips(const TtvosModel& model, const std::vector<std::string>& names,
                          const std::vector<Clip>& clips);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  std::size_t clips = 0;
  std::size_t skipped = 0;
  double loss = 0.0, ce = 0.0, tc = 0.0, train_j = 0.0;
  bool has_val = false;
  double val_j = 0.0, val_f = 0.0, val_jf = 0.0;
};

struct FitResult {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  std::vector<std::string> warnings;
};

/// Trains on every sequence under `data_root`, optionally validating on
/// `val_root` after each epoch. Writes out_dir/log.csv,
/// out_dir/ckpt/epoch_%03d/ and out_dir/ckpt/best/ (best validation J&F, or
/// lowest training loss without validation data). An empty out_dir skips
/// all writing.
FitResult fit(TtvosModel& model, const std::filesystem::path& data_root,
              const std::filesystem::path& val_root, const TrainConfig& cfg,
              const std::filesystem::path& out_dir,
              const std::function<void(const EpochLog&)>& on_epoch = {});

/// In-memory variant used by fit() and the acceptance experiments.
FitResult fit_clips(TtvosModel& model, const std::vector<Clip>& train,
                    const std::vector<std::string>& val_names, const std::vector<Clip>& val,
                    const TrainConfig& cfg, const std::filesystem::path& out_dir,
                    const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace ttvos
