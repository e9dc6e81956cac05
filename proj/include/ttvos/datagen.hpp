#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ttvos/label_map.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

/// A short video: frames [3,H,W] in [0,1] and label maps of equal length.
struct Clip {
  std::vector<Tensor> frames;
  std::vector<LabelMap> masks;

  std::size_t length() const { return frames.size(); }
  std::size_t height() const { return frames.empty() ? 0 : frames.front().dim(1); }
  std::size_t width() const { return frames.empty() ? 0 : frames.front().dim(2); }
  /// Number of objects, i.e. the largest label in the first mask.
  int objects() const { return masks.empty() ? 0 : masks.front().max_label(); }
};

// ---------------------------------------------------------------------------
// Affine clips

/// Inter-frame motion about the image center. Translation is a fraction of
/// the extent.
struct AffineParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double translate_x = 0.0;
  double translate_y = 0.0;
  double shear_deg = 0.0;
};

struct AffineRanges {
  double rotation_deg = 15.0;  // +-
  double scale_min = 0.9;
  double scale_max = 1.1;
  double translate = 0.1;      // +- fraction of extent
  double shear_deg = 5.0;      // +-

  static AffineRanges identity() { return {0.0, 1.0, 1.0, 0.0, 0.0}; }
};

/// Frame 1 is the input; frame k+2 applies steps[0..k] composed. Images are
/// sampled bilinearly with edge clamping, masks by nearest neighbor with
/// background outside.
Clip affine_clip_from_steps(const Tensor& image, const LabelMap& mask,
                            const std::vector<AffineParams>& steps);

/// Draws T-1 steps uniformly within `ranges`.
Clip gen_affine_clip(const Tensor& image, const LabelMap& mask, std::size_t T,
                     const AffineRanges& ranges, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Procedural shape clips

struct ShapeSpec {
  enum class Kind { kEllipse, kPolygon };
  Kind kind = Kind::kEllipse;
  double cx = 0, cy = 0;        // center, pixels
  double rx = 8, ry = 8;        // radii, pixels
  double angle = 0;             // radians
  double vx = 0, vy = 0;        // pixels per frame
  double spin = 0;              // radians per frame
  double deform = 0;            // relative radius oscillation amplitude
  double deform_rate = 0;       // radians per frame
  std::vector<double> vertices; // polygon radius multipliers, evenly spaced in angle
  std::array<double, 3> color{1, 0, 0};
};

struct ShapeScene {
  std::size_t height = 64, width = 112;
  std::array<double, 3> base{0.5, 0.5, 0.5};
  double texture = 0.15;        // amplitude of the background pattern
  std::array<double, 4> waves{0.3, 0.2, 0.0, 0.0};  // fx, fy, phase_x, phase_y
  std::uint64_t noise_seed = 0;
  std::vector<ShapeSpec> objects;  // later objects are drawn on top
};

/// Renders T frames. Centers move linearly and reflect off the image border.
Clip render_shape_clip(const ShapeScene& scene, std::size_t T);

ShapeScene random_shape_scene(std::size_t n_objects, std::size_t height, std::size_t width,
                              std::uint64_t seed);

/// random_shape_scene rendered for T frames, with every object visible in
/// frame 1.
Clip gen_shape_clip(std::size_t T, std::size_t n_objects, std::size_t height, std::size_t width,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sequence directories: <root>/<name>/frames/%05d.ppm and masks/%05d.pgm,
// numbered from 0.

void write_sequence(const std::filesystem::path& seq_dir, const Clip& clip);
Clip read_sequence(const std::filesystem::path& seq_dir);
/// Sorted names of subdirectories of `root` holding a frames/ directory.
std::vector<std::string> list_sequences(const std::filesystem::path& root);
std::string frame_name(std::size_t index, const char* ext);

}  // namespace ttvos
