#include "ttvos/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ttvos/datagen.hpp"
#include "ttvos/errors.hpp"
#include "ttvos/image_io.hpp"

namespace ttvos {

namespace fs = std::filesystem;

namespace {

void require_same_extent(const LabelMap& a, const LabelMap& b) {
  if (a.height != b.height || a.width != b.width) {
    throw InputError("mask extents differ: " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                     std::to_string(b.width));
  }
}

LabelMap dilate(const LabelMap& m, int r) {
  LabelMap out(m.height, m.width);
  const long h = static_cast<long>(m.height), w = static_cast<long>(m.width);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      if (!m.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x))) continue;
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy > static_cast<long>(r) * r) continue;
          const long yy = y + dy, xx = x + dx;
          if (yy >= 0 && yy < h && xx >= 0 && xx < w)
            out.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) = 1;
        }
    }
  return out;
}

std::size_t overlap(const LabelMap& a, const LabelMap& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += (a.labels[i] && b.labels[i]) ? 1 : 0;
  return n;
}

std::size_t area(const LabelMap& a) {
  return static_cast<std::size_t>(std::count_if(a.labels.begin(), a.labels.end(), [](int v) { return v != 0; }));
}

}  // namespace

double jaccard(const LabelMap& pred, const LabelMap& gt) {
  require_same_extent(pred, gt);
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.labels[i] != 0, g = gt.labels[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

LabelMap mask_boundary(const LabelMap& mask) {
  LabelMap out(mask.height, mask.width);
  const std::size_t h = mask.height, w = mask.width;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      if (!mask.at(y, x)) continue;
      const bool edge = y == 0 || x == 0 || y + 1 == h || x + 1 == w;
      if (edge || !mask.at(y - 1, x) || !mask.at(y + 1, x) || !mask.at(y, x - 1) ||
          !mask.at(y, x + 1)) {
        out.at(y, x) = 1;
      }
    }
  return out;
}

int boundary_tolerance(std::size_t height, std::size_t width) {
  const double diag = std::hypot(static_cast<double>(height), static_cast<double>(width));
  return static_cast<int>(std::ceil(0.008 * diag));
}

double boundary_f(const LabelMap& pred, const LabelMap& gt) {
  require_same_extent(pred, gt);
  const LabelMap pb = mask_boundary(pred), gb = mask_boundary(gt);
  const std::size_t np = area(pb), ng = area(gb);
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  const int r = boundary_tolerance(pred.height, pred.width);
  const double precision = static_cast<double>(overlap(pb, dilate(gb, r))) / static_cast<double>(np);
  const double recall = static_cast<double>(overlap(gb, dilate(pb, r))) / static_cast<double>(ng);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<ObjectScore> score_sequence(const std::string& name, const std::vector<LabelMap>& pred,
                                        const std::vector<LabelMap>& gt) {
  if (pred.size() != gt.size()) {
    throw InputError(name + ": " + std::to_string(pred.size()) + " predicted frames for " +
                     std::to_string(gt.size()) + " ground-truth frames");
  }
  if (gt.size() < 2) throw InputError(name + ": need at least two frames to score");
  const std::size_t first = 1, last = gt.size() == 2 ? 2 : gt.size() - 1;  // [first, last)
  std::vector<ObjectScore> rows;
  for (int id = 1; id <= gt.front().max_label(); ++id) {
    if (gt.front().count(id) == 0) continue;
    ObjectScore s{name, id, 0.0, 0.0};
    for (std::size_t t = first; t < last; ++t) {
      const LabelMap p = pred[t].indicator(id), g = gt[t].indicator(id);
      s.j += jaccard(p, g);
      s.f += boundary_f(p, g);
    }
    s.j /= static_cast<double>(last - first);
    s.f /= static_cast<double>(last - first);
    rows.push_back(s);
  }
  return rows;
}

EvalReport summarize(std::vector<ObjectScore> rows) {
  EvalReport r;
  r.rows = std::move(rows);
  for (const auto& s : r.rows) {
    r.mean_j += s.j;
    r.mean_f += s.f;
  }
  if (!r.rows.empty()) {
    r.mean_j /= static_cast<double>(r.rows.size());
    r.mean_f /= static_cast<double>(r.rows.size());
  }
  r.jf = (r.mean_j + r.mean_f) / 2.0;
  return r;
}

void EvalReport::write_csv(const fs::path& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os.precision(6);
  os << std::fixed << "sequence,object,J,F\n";
  for (const auto& s : rows) os << s.sequence << ',' << s.object << ',' << s.j << ',' << s.f << '\n';
  os << "MEAN,," << mean_j << ',' << mean_f << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %6s %8s %8s\n", "sequence", "object", "J", "F");
  os << line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof line, "%-24s %6d %8.4f %8.4f\n", s.sequence.c_str(), s.object, s.j, s.f);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-24s %6s %8.4f %8.4f\n", "MEAN", "", mean_j, mean_f);
  os << line;
  std::snprintf(line, sizeof line, "J&F %.4f\n", jf);
  os << line;
  return os.str();
}

EvalReport evaluate(const fs::path& pred_root, const fs::path& gt_root) {
  std::vector<ObjectScore> rows;
  std::vector<std::string> missing;
  for (const std::string& name : list_sequences(gt_root)) {
    const fs::path gt_dir = gt_root / name / "masks";
    std::vector<fs::path> gt_files;
    if (fs::is_directory(gt_dir)) {
      for (const auto& e : fs::directory_iterator(gt_dir))
        if (e.path().extension() == ".pgm") gt_files.push_back(e.path());
    }
    std::sort(gt_files.begin(), gt_files.end());
    if (gt_files.empty()) {
      missing.push_back(gt_dir.string() + " (no ground-truth masks)");
      continue;
    }
    fs::path pred_dir = pred_root / name;
    if (fs::is_directory(pred_dir / "masks")) pred_dir /= "masks";
    std::vector<LabelMap> pred, gt;
    bool complete = true;
    for (const fs::path& g : gt_files) {
      const fs::path p = pred_dir / g.filename();
      if (!fs::exists(p)) {
        missing.push_back(p.string());
        complete = false;
        continue;
      }
      if (complete) {
        gt.push_back(read_pgm(g));
        pred.push_back(read_pgm(p));
      }
    }
    if (!complete) continue;
    auto seq_rows = score_sequence(name, pred, gt);
    rows.insert(rows.end(), seq_rows.begin(), seq_rows.end());
  }
  if (!missing.empty()) {
    std::string msg = "missing prediction files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }
  return summarize(std::move(rows));
}

}  // namespace ttvos
