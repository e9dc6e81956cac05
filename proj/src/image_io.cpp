#include "ttvos/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "ttvos/errors.hpp"

namespace ttvos {

namespace fs = std::filesystem;

namespace {

struct Header {
  std::size_t width = 0, height = 0, maxval = 0;
};

// Reads the next whitespace-delimited token, skipping '#' comments.
std::string token(std::istream& is, const fs::path& path) {
  std::string out;
  int c = is.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = is.get();
    } else if (std::isspace(c)) {
      if (!out.empty()) return out;
    } else {
      out.push_back(static_cast<char>(c));
    }
    c = is.get();
  }
  if (out.empty()) throw IoError(path.string() + ": truncated header");
  return out;
}

Header read_header(std::istream& is, const fs::path& path, const char* magic) {
  if (token(is, path) != magic) throw IoError(path.string() + ": expected " + magic + " file");
  Header h;
  try {
    h.width = std::stoul(token(is, path));
    h.height = std::stoul(token(is, path));
    h.maxval = std::stoul(token(is, path));
  } catch (const std::logic_error&) {
    throw IoError(path.string() + ": malformed header");
  }
  if (h.width == 0 || h.height == 0 || h.maxval != 255) {
    throw IoError(path.string() + ": only non-empty 8-bit images are supported");
  }
  return h;
}

std::vector<unsigned char> read_payload(std::istream& is, std::size_t n, const fs::path& path) {
  std::vector<unsigned char> bytes(n);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw IoError(path.string() + ": truncated data");
  return bytes;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

}  // namespace

Tensor read_ppm(const fs::path& path) {
  auto is = open_in(path);
  const Header h = read_header(is, path, "P6");
  const std::size_t hw = h.width * h.height;
  auto bytes = read_payload(is, 3 * hw, path);
  std::vector<double> v(3 * hw);
  for (std::size_t px = 0; px < hw; ++px)
    for (std::size_t c = 0; c < 3; ++c) v[c * hw + px] = bytes[3 * px + c] / 255.0;
  return Tensor(Shape{3, h.height, h.width}, std::move(v));
}

void write_ppm(const fs::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("image must be [3,H,W], got " + shape_str(image.shape()));
  }
  const std::size_t h = image.dim(1), w = image.dim(2), hw = h * w;
  std::vector<unsigned char> bytes(3 * hw);
  auto v = image.data();
  for (std::size_t px = 0; px < hw; ++px)
    for (std::size_t c = 0; c < 3; ++c)
      bytes[3 * px + c] =
          static_cast<unsigned char>(std::lround(std::clamp(v[c * hw + px], 0.0, 1.0) * 255.0));
  auto os = open_out(path);
  os << "P6\n" << w << ' ' << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

LabelMap read_pgm(const fs::path& path) {
  auto is = open_in(path);
  const Header h = read_header(is, path, "P5");
  auto bytes = read_payload(is, h.width * h.height, path);
  LabelMap out(h.height, h.width);
  std::copy(bytes.begin(), bytes.end(), out.labels.begin());
  return out;
}

void write_pgm(const fs::path& path, const LabelMap& labels) {
  std::vector<unsigned char> bytes(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int v = labels.labels[i];
    if (v < 0 || v > 255) throw InputError("label " + std::to_string(v) + " does not fit a byte");
    bytes[i] = static_cast<unsigned char>(v);
  }
  auto os = open_out(path);
  os << "P5\n" << labels.width << ' ' << labels.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace ttvos
