#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ttvos/label_map.hpp"

namespace ttvos {

/// |pred & gt| / |pred | gt| on binary masks; 1 when both are empty.
double jaccard(const LabelMap& pred, const LabelMap& gt);

/// Foreground pixels with a background 4-neighbor or on the image edge.
LabelMap mask_boundary(const LabelMap& mask);

/// Boundary match tolerance: ceil(0.008 * image diagonal).
int boundary_tolerance(std::size_t height, std::size_t width);

/// Boundary F-measure with matches counted inside a disk of radius
/// boundary_tolerance(). 1 when both boundaries are empty, 0 when exactly
/// one is.
double boundary_f(const LabelMap& pred, const LabelMap& gt);

struct ObjectScore {
  std::string sequence;
  int object = 0;
  double j = 0.0;
  double f = 0.0;
};

struct EvalReport {
  std::vector<ObjectScore> rows;
  double mean_j = 0.0;
  double mean_f = 0.0;
  double jf = 0.0;  // (mean_j + mean_f) / 2

  void write_csv(const std::filesystem::path& path) const;
  std::string table() const;
};

/// Per-object J and F averaged over the scored frames of one sequence.
/// Frames 2..T-1 are scored (1-based); a two-frame sequence scores frame 2.
/// Objects are the ids present in the first ground-truth mask.
std::vector<ObjectScore> score_sequence(const std::string& name,
                                        const std::vector<LabelMap>& pred,
                                        const std::vector<LabelMap>& gt);

/// Means over all rows.
EvalReport summarize(std::vector<ObjectScore> rows);

/// Scores every sequence under gt_root (<seq>/masks/%05d.pgm) against
/// predictions at pred_root/<seq>/%05d.pgm (or pred_root/<seq>/masks/).
EvalReport evaluate(const std::filesystem::path& pred_root, const std::filesystem::path& gt_root);

}  // namespace ttvos
