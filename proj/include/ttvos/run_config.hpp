#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

namespace ttvos {

/// Plain `key=value` lines; `#` starts a comment, blank lines are skipped.
/// Entries keep file order. A repeated key or a line without '=' is a
/// ConfigError naming the source and line.
struct RunConfig {
  std::vector<std::pair<std::string, std::string>> entries;

  static RunConfig parse(std::istream& is, const std::string& source = "<config>");
  static RunConfig load(const std::filesystem::path& path);

  const std::string* find(const std::string& key) const;
};

}  // namespace ttvos
