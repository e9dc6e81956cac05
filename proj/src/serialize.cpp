#include "ttvos/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "ttvos/errors.hpp"

namespace ttvos {

namespace {
constexpr char kMagic[4] = {'T', 'T', 'E', 'N'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 1;

void require(std::istream& is, const char* what) {
  if (!is) throw IoError(std::string("truncated TTEN stream while reading ") + what);
}
}  // namespace

void write_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  require(is, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kMagic, 4);
  const char header[3] = {static_cast<char>(kVersion), static_cast<char>(kDtypeF64),
                          static_cast<char>(t.rank())};
  os.write(header, 3);
  for (auto d : t.shape()) write_u64(os, d);
  for (double v : t.data()) write_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("failed writing TTEN tensor");
}

Tensor read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(is, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a TTEN stream (bad magic)");
  unsigned char header[3];
  is.read(reinterpret_cast<char*>(header), 3);
  require(is, "header");
  if (header[0] != kVersion) {
    throw IoError("unsupported TTEN version " + std::to_string(header[0]));
  }
  if (header[1] != kDtypeF64) throw IoError("unsupported TTEN dtype " + std::to_string(header[1]));
  Shape shape(header[2]);
  for (auto& d : shape) d = read_u64(is);
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = std::bit_cast<double>(read_u64(is));
  return Tensor(std::move(shape), std::move(values));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return read_tensor(is);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& dir, const ParameterList& params) {
  check_unique_names(params);
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.txt").string());
  for (const auto& p : params) {
    const std::string file = p.name + ".tten";
    save_tensor(dir / file, p.tensor);
    manifest << p.name << '\t' << file << '\n';
  }
}

void load_checkpoint(const std::filesystem::path& dir, ParameterList& params) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw IoError("missing " + (dir / "manifest.txt").string());
  std::map<std::string, std::string> files;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw IoError("malformed manifest line: " + line);
    files[line.substr(0, tab)] = line.substr(tab + 1);
  }
  for (auto& p : params) {
    auto it = files.find(p.name);
    if (it == files.end()) throw IoError("checkpoint lacks parameter " + p.name);
    Tensor loaded = load_tensor(dir / it->second);
    if (loaded.shape() != p.tensor.shape()) {
      throw DimensionError("checkpoint parameter " + p.name + " has shape " +
                           shape_str(loaded.shape()) + ", model expects " +
                           shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    auto src = loaded.data();
    std::copy(src.begin(), src.end(), dst.begin());
    files.erase(it);
  }
  if (!files.empty()) {
    throw IoError("checkpoint has unknown parameter " + files.begin()->first);
  }
}

}  // namespace ttvos
