#include "ttvos/run_config.hpp"

#include <fstream>

#include "ttvos/errors.hpp"

namespace ttvos {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::parse(std::istream& is, const std::string& source) {
  RunConfig cfg;
  std::string line;
  for (std::size_t n = 1; std::getline(is, line); ++n) {
    const std::string where = source + ":" + std::to_string(n);
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.find(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.entries.emplace_back(std::move(key), std::move(value));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file " + path.string());
  return parse(is, path.string());
}

const std::string* RunConfig::find(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

}  // namespace ttvos
