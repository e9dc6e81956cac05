#include "ttvos/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "ttvos/errors.hpp"
#include "ttvos/image_io.hpp"

namespace ttvos {

namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// 2x3 affine map: [x', y'] = [a b; d e] [x, y] + [c, f]
struct Affine {
  double a = 1, b = 0, c = 0, d = 0, e = 1, f = 0;

  Affine then(const Affine& next) const {  // next o this
    return {next.a * a + next.b * d, next.a * b + next.b * e, next.a * c + next.b * f + next.c,
            next.d * a + next.e * d, next.d * b + next.e * e, next.d * c + next.e * f + next.f};
  }
  Affine inverse() const {
    const double det = a * e - b * d;
    const double ia = e / det, ib = -b / det, id = -d / det, ie = a / det;
    return {ia, ib, -(ia * c + ib * f), id, ie, -(id * c + ie * f)};
  }
};

Affine step_matrix(const AffineParams& p, std::size_t h, std::size_t w) {
  const double cx = (static_cast<double>(w) - 1) / 2, cy = (static_cast<double>(h) - 1) / 2;
  const double th = p.rotation_deg * kDeg, sh = std::tan(p.shear_deg * kDeg);
  // rotation * shear * scale
  const double r00 = std::cos(th), r01 = -std::sin(th), r10 = std::sin(th), r11 = std::cos(th);
  const double m00 = r00 * p.scale, m01 = (r00 * sh + r01) * p.scale;
  const double m10 = r10 * p.scale, m11 = (r10 * sh + r11) * p.scale;
  const double tx = p.translate_x * static_cast<double>(w), ty = p.translate_y * static_cast<double>(h);
  return {m00, m01, cx + tx - m00 * cx - m01 * cy, m10, m11, cy + ty - m10 * cx - m11 * cy};
}

void warp(const Tensor& image, const LabelMap& mask, const Affine& forward, Tensor& out_image,
          LabelMap& out_mask) {
  const std::size_t h = mask.height, w = mask.width, hw = h * w;
  const Affine inv = forward.inverse();
  std::vector<double> v(3 * hw);
  out_mask = LabelMap(h, w);
  auto src = image.data();
  auto at = [&](std::size_t c, long y, long x) {
    y = std::clamp(y, 0L, static_cast<long>(h) - 1);
    x = std::clamp(x, 0L, static_cast<long>(w) - 1);
    return src[c * hw + static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double sx = inv.a * x + inv.b * y + inv.c;
      const double sy = inv.d * x + inv.e * y + inv.f;
      const long x0 = static_cast<long>(std::floor(sx)), y0 = static_cast<long>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      for (std::size_t c = 0; c < 3; ++c) {
        v[c * hw + y * w + x] = (1 - fy) * ((1 - fx) * at(c, y0, x0) + fx * at(c, y0, x0 + 1)) +
                                fy * ((1 - fx) * at(c, y0 + 1, x0) + fx * at(c, y0 + 1, x0 + 1));
      }
      const long nx = std::lround(sx), ny = std::lround(sy);
      if (nx >= 0 && ny >= 0 && nx < static_cast<long>(w) && ny < static_cast<long>(h)) {
        out_mask.at(y, x) = mask.at(static_cast<std::size_t>(ny), static_cast<std::size_t>(nx));
      }
    }
  }
  out_image = Tensor(Shape{3, h, w}, std::move(v));
}

bool inside(const ShapeSpec& s, double rx, double ry, double angle, double dx, double dy) {
  const double u = dx * std::cos(angle) + dy * std::sin(angle);
  const double v = -dx * std::sin(angle) + dy * std::cos(angle);
  if (s.kind == ShapeSpec::Kind::kEllipse || s.vertices.size() < 3) {
    return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
  }
  const std::size_t n = s.vertices.size();
  bool in = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double ai = 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    const double aj = 2 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    const double xi = rx * s.vertices[i] * std::cos(ai), yi = ry * s.vertices[i] * std::sin(ai);
    const double xj = rx * s.vertices[j] * std::cos(aj), yj = ry * s.vertices[j] * std::sin(aj);
    if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) in = !in;
  }
  return in;
}

void reflect(double& pos, double& vel, double hi) {
  if (pos < 0) {
    pos = -pos;
    vel = -vel;
  } else if (pos > hi) {
    pos = 2 * hi - pos;
    vel = -vel;
  }
}

std::array<double, 3> hsv(double hue, double sat, double val) {
  const double hh = std::fmod(hue, 1.0) * 6.0;
  const int sector = static_cast<int>(hh);
  const double frac = hh - sector;
  const double p = val * (1 - sat), q = val * (1 - sat * frac), t = val * (1 - sat * (1 - frac));
  switch (sector % 6) {
    case 0: return {val, t, p};
    case 1: return {q, val, p};
    case 2: return {p, val, t};
    case 3: return {p, q, val};
    case 4: return {t, p, val};
    default: return {val, p, q};
  }
}

}  // namespace

Clip affine_clip_from_steps(const Tensor& image, const LabelMap& mask,
                            const std::vector<AffineParams>& steps) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw InputError("image must be [3,H,W], got " + shape_str(image.shape()));
  }
  if (image.dim(1) != mask.height || image.dim(2) != mask.width) {
    throw InputError("mask " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                     " does not match image " + shape_str(image.shape()));
  }
  if (mask.height % 16 != 0 || mask.width % 16 != 0) {
    throw ConfigError("clip extent must be divisible by 16");
  }
  Clip clip;
  clip.frames.push_back(image.detach());
  clip.masks.push_back(mask);
  Affine total;
  for (const AffineParams& p : steps) {
    total = total.then(step_matrix(p, mask.height, mask.width));
    Tensor frame;
    LabelMap m;
    warp(image, mask, total, frame, m);
    clip.frames.push_back(std::move(frame));
    clip.masks.push_back(std::move(m));
  }
  return clip;
}

Clip gen_affine_clip(const Tensor& image, const LabelMap& mask, std::size_t T,
                     const AffineRanges& r, std::uint64_t seed) {
  if (T < 1) throw ConfigError("clip length must be >= 1");
  std::mt19937_64 rng(seed);
  auto uni = [&rng](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  std::vector<AffineParams> steps;
  for (std::size_t k = 1; k < T; ++k) {
    AffineParams p;
    p.rotation_deg = uni(-r.rotation_deg, r.rotation_deg);
    p.scale = uni(r.scale_min, r.scale_max);
    p.translate_x = uni(-r.translate, r.translate);
    p.translate_y = uni(-r.translate, r.translate);
    p.shear_deg = uni(-r.shear_deg, r.shear_deg);
    steps.push_back(p);
  }
  return affine_clip_from_steps(image, mask, steps);
}

Clip render_shape_clip(const ShapeScene& scene, std::size_t T) {
  const std::size_t h = scene.height, w = scene.width, hw = h * w;
  if (h == 0 || w == 0 || h % 16 != 0 || w % 16 != 0) {
    throw ConfigError("clip extent must be positive and divisible by 16");
  }
  if (scene.objects.size() > 255) throw ConfigError("at most 255 objects");

  std::vector<double> background(3 * hw);
  std::mt19937_64 noise_rng(scene.noise_seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double pattern = std::sin(scene.waves[0] * x + scene.waves[2]) *
                             std::cos(scene.waves[1] * y + scene.waves[3]);
      const double grain = 0.03 * noise(noise_rng);
      for (std::size_t c = 0; c < 3; ++c) {
        const double tint = c == 0 ? 1.0 : (c == 1 ? 0.8 : 0.6);
        background[c * hw + y * w + x] =
            std::clamp(scene.base[c] + scene.texture * tint * pattern + grain, 0.0, 1.0);
      }
    }
  }

  std::vector<ShapeSpec> live = scene.objects;
  Clip clip;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> v = background;
    LabelMap m(h, w);
    for (std::size_t k = 0; k < live.size(); ++k) {
      const ShapeSpec& s = live[k];
      const double wobble = s.deform * std::sin(s.deform_rate * static_cast<double>(t));
      const double rx = s.rx * (1 + wobble), ry = s.ry * (1 - wobble);
      const double angle = s.angle + s.spin * static_cast<double>(t);
      const double reach = std::max(rx, ry) * 1.3 + 1;
      const long y0 = std::max(0L, static_cast<long>(std::floor(s.cy - reach)));
      const long y1 = std::min(static_cast<long>(h) - 1, static_cast<long>(std::ceil(s.cy + reach)));
      const long x0 = std::max(0L, static_cast<long>(std::floor(s.cx - reach)));
      const long x1 = std::min(static_cast<long>(w) - 1, static_cast<long>(std::ceil(s.cx + reach)));
      for (long y = y0; y <= y1; ++y) {
        for (long x = x0; x <= x1; ++x) {
          const double dx = static_cast<double>(x) - s.cx, dy = static_cast<double>(y) - s.cy;
          if (!inside(s, rx, ry, angle, dx, dy)) continue;
          const std::size_t px = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
          m.labels[px] = static_cast<int>(k + 1);
          // faint radial shading keeps objects from being flat patches
          const double shade = 0.9 + 0.1 * std::cos(0.35 * std::hypot(dx, dy));
          for (std::size_t c = 0; c < 3; ++c) v[c * hw + px] = std::clamp(s.color[c] * shade, 0.0, 1.0);
        }
      }
    }
    clip.frames.emplace_back(Shape{3, h, w}, std::move(v));
    clip.masks.push_back(std::move(m));
    for (ShapeSpec& s : live) {
      s.cx += s.vx;
      s.cy += s.vy;
      reflect(s.cx, s.vx, static_cast<double>(w) - 1);
      reflect(s.cy, s.vy, static_cast<double>(h) - 1);
    }
  }
  return clip;
}

namespace {

ShapeScene draw_scene(std::size_t n_objects, std::size_t h, std::size_t w, std::mt19937_64& rng) {
  auto uni = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ShapeScene scene;
  scene.height = h;
  scene.width = w;
  const double bg_hue = uni(0, 1);
  scene.base = hsv(bg_hue, uni(0.1, 0.3), uni(0.35, 0.6));
  scene.texture = uni(0.05, 0.15);
  scene.waves = {uni(0.1, 0.6), uni(0.1, 0.6), uni(0, 6.3), uni(0, 6.3)};
  scene.noise_seed = rng();
  const double unit = static_cast<double>(std::min(h, w)) / 64.0;
  for (std::size_t k = 0; k < n_objects; ++k) {
    ShapeSpec s;
    s.kind = uni(0, 1) < 0.5 ? ShapeSpec::Kind::kEllipse : ShapeSpec::Kind::kPolygon;
    s.rx = uni(10, 18) * unit;
    s.ry = uni(10, 18) * unit;
    s.cx = uni(s.rx, static_cast<double>(w) - 1 - s.rx);
    s.cy = uni(s.ry, static_cast<double>(h) - 1 - s.ry);
    s.angle = uni(0, std::numbers::pi);
    s.vx = uni(-1.5, 1.5) * unit;
    s.vy = uni(-1.5, 1.5) * unit;
    s.spin = uni(-0.05, 0.05);
    s.deform = uni(0, 0.12);
    s.deform_rate = uni(0.2, 0.5);
    if (s.kind == ShapeSpec::Kind::kPolygon) {
      const int n = std::uniform_int_distribution<int>(3, 6)(rng);
      for (int i = 0; i < n; ++i) s.vertices.push_back(uni(0.75, 1.2));
    }
    // saturated object colors on a muted background
    s.color = hsv(bg_hue + uni(0.2, 0.8), uni(0.65, 0.95), uni(0.75, 1.0));
    scene.objects.push_back(std::move(s));
  }
  return scene;
}

}  // namespace

ShapeScene random_shape_scene(std::size_t n_objects, std::size_t height, std::size_t width,
                              std::uint64_t seed) {
  if (n_objects < 1) throw ConfigError("need at least one object");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ShapeScene scene = draw_scene(n_objects, height, width, rng);
    // Every object must keep at least half its area visible in frame 1.
    const Clip first = render_shape_clip(scene, 1);
    bool ok = true;
    for (std::size_t k = 0; k < n_objects && ok; ++k) {
      ShapeScene alone = scene;
      alone.objects = {scene.objects[k]};
      const std::size_t full = render_shape_clip(alone, 1).masks[0].count(1);
      ok = full > 0 && 2 * first.masks[0].count(static_cast<int>(k + 1)) >= full;
    }
    if (ok) return scene;
  }
  throw ConfigError("could not place " + std::to_string(n_objects) + " visible objects");
}

Clip gen_shape_clip(std::size_t T, std::size_t n_objects, std::size_t height, std::size_t width,
                    std::uint64_t seed) {
  return render_shape_clip(random_shape_scene(n_objects, height, width, seed), T);
}

std::string frame_name(std::size_t index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu.%s", index, ext);
  return buf;
}

void write_sequence(const fs::path& seq_dir, const Clip& clip) {
  fs::create_directories(seq_dir / "frames");
  fs::create_directories(seq_dir / "masks");
  for (std::size_t t = 0; t < clip.length(); ++t) {
    write_ppm(seq_dir / "frames" / frame_name(t, "ppm"), clip.frames[t]);
    write_pgm(seq_dir / "masks" / frame_name(t, "pgm"), clip.masks[t]);
  }
}

Clip read_sequence(const fs::path& seq_dir) {
  std::vector<fs::path> frames;
  if (!fs::is_directory(seq_dir / "frames")) {
    throw IoError("missing directory " + (seq_dir / "frames").string());
  }
  for (const auto& e : fs::directory_iterator(seq_dir / "frames"))
    if (e.path().extension() == ".ppm") frames.push_back(e.path());
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) throw IoError("no frames in " + (seq_dir / "frames").string());
  Clip clip;
  std::vector<std::string> missing;
  for (const fs::path& f : frames) {
    const fs::path m = seq_dir / "masks" / (f.stem().string() + ".pgm");
    if (!fs::exists(m)) {
      missing.push_back(m.string());
      continue;
    }
    clip.frames.push_back(read_ppm(f));
    clip.masks.push_back(read_pgm(m));
  }
  if (!missing.empty()) {
    std::string msg = "missing mask files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }
  for (std::size_t t = 0; t < clip.length(); ++t) {
    if (clip.frames[t].dim(1) != clip.masks[t].height ||
        clip.frames[t].dim(2) != clip.masks[t].width ||
        clip.frames[t].shape() != clip.frames[0].shape()) {
      throw InputError(seq_dir.string() + ": frame " + std::to_string(t) + " extent mismatch");
    }
  }
  return clip;
}

std::vector<std::string> list_sequences(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory() && fs::is_directory(e.path() / "frames"))
      names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace ttvos
