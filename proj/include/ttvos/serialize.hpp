#pragma once

#include <filesystem>
#include <iosfwd>

#include "ttvos/nn.hpp"
#include "ttvos/tensor.hpp"

namespace ttvos {

// TTEN tensor files: "TTEN", u8 version (1), u8 dtype (1 = f64), u8 rank,
// rank x little-endian u64 extents, then the little-endian payload.

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

void write_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64(std::istream& is);

/// A checkpoint is a directory of TTEN files plus manifest.txt with one
/// "name<TAB>filename" line per parameter.
void save_checkpoint(const std::filesystem::path& dir, const ParameterList& params);

/// Loads values into `params` in place. Every parameter must be present in
/// the manifest with a matching shape; extra manifest entries are an error.
void load_checkpoint(const std::filesystem::path& dir, ParameterList& params);

}  // namespace ttvos
