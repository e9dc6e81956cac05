#include "ttvos/model.hpp"

#include <fstream>
#include <sstream>

#include "ttvos/errors.hpp"
#include "ttvos/serialize.hpp"

namespace ttvos {

namespace fs = std::filesystem;

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.c4 = 4;
  c.c8 = 4;
  c.c16 = 4;
  c.c_st = 4;
  c.c_sim = 4;
  c.c_tp = 8;
  c.c_dec = 8;
  c.tp_groups = 4;
  return c;
}

void ModelConfig::validate() const {
  for (std::size_t v : {c4, c8, c16, c_st, c_sim, c_tp, c_dec, tp_groups}) {
    if (v == 0) throw ConfigError("channel widths and group count must be positive");
  }
  if (c_tp % tp_groups != 0) {
    throw ConfigError("c_tp " + std::to_string(c_tp) + " is not divisible by tp_groups " +
                      std::to_string(tp_groups));
  }
  if (!(leaky_alpha > 0.0 && leaky_alpha < 1.0)) {
    throw ConfigError("leaky_alpha must lie in (0, 1)");
  }
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  std::ostringstream alpha;
  alpha.precision(17);
  alpha << leaky_alpha;
  return {{"c4", std::to_string(c4)},
          {"c8", std::to_string(c8)},
          {"c16", std::to_string(c16)},
          {"c_st", std::to_string(c_st)},
          {"c_sim", std::to_string(c_sim)},
          {"c_tp", std::to_string(c_tp)},
          {"c_dec", std::to_string(c_dec)},
          {"tp_groups", std::to_string(tp_groups)},
          {"leaky_alpha", alpha.str()},
          {"short_matching", short_matching ? "1" : "0"},
          {"long_matching", long_matching ? "1" : "0"},
          {"template_update", template_update ? "1" : "0"},
          {"box_init", box_init ? "1" : "0"}};
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto size = [](const std::string& key, const std::string& v) -> std::size_t {
    try {
      std::size_t used = 0;
      const unsigned long long n = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ConfigError("model key " + key + ": expected a non-negative integer, got '" + v + "'");
    }
  };
  auto flag = [](const std::string& key, const std::string& v) {
    if (v == "1" || v == "true") return true;
    if (v == "0" || v == "false") return false;
    throw ConfigError("model key " + key + ": expected 0/1, got '" + v + "'");
  };
  for (const auto& [key, value] : kv) {
    if (key == "c4") c.c4 = size(key, value);
    else if (key == "c8") c.c8 = size(key, value);
    else if (key == "c16") c.c16 = size(key, value);
    else if (key == "c_st") c.c_st = size(key, value);
    else if (key == "c_sim") c.c_sim = size(key, value);
    else if (key == "c_tp") c.c_tp = size(key, value);
    else if (key == "c_dec") c.c_dec = size(key, value);
    else if (key == "tp_groups") c.tp_groups = size(key, value);
    else if (key == "leaky_alpha") {
      try {
        c.leaky_alpha = std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError("model key leaky_alpha: not a number: '" + value + "'");
      }
    } else if (key == "short_matching") c.short_matching = flag(key, value);
    else if (key == "long_matching") c.long_matching = flag(key, value);
    else if (key == "template_update") c.template_update = flag(key, value);
    else if (key == "box_init") c.box_init = flag(key, value);
    else throw ConfigError("unknown model key '" + key + "'");
  }
  c.validate();
  return c;
}

TtvosModel::TtvosModel(const ModelConfig& cfg)
    : backbone((cfg.validate(), cfg)),
      short_term(cfg),
      attention(cfg),
      decoder(cfg),
      pihead(cfg),
      cfg_(cfg) {}

void TtvosModel::init(std::uint64_t seed) {
  Rng rng(seed);
  backbone.init(rng);
  short_term.init(rng);
  attention.init(rng);
  decoder.init(rng);
  pihead.init(rng);
}

ParameterList TtvosModel::parameters() const {
  ParameterList out;
  backbone.collect(out);
  short_term.collect(out);
  attention.collect(out);
  decoder.collect(out);
  pihead.collect(out);
  check_unique_names(out);
  return out;
}

void TtvosModel::save(const fs::path& dir) const {
  save_checkpoint(dir, parameters());
  std::ofstream os(dir / "config.txt");
  for (const auto& [k, v] : cfg_.to_map()) os << k << '=' << v << '\n';
  if (!os) throw IoError("cannot write " + (dir / "config.txt").string());
}

std::unique_ptr<TtvosModel> TtvosModel::load(const fs::path& dir) {
  const fs::path cfg_path = dir / "config.txt";
  std::ifstream is(cfg_path);
  if (!is) throw IoError("cannot read " + cfg_path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(cfg_path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto model = std::make_unique<TtvosModel>(ModelConfig::from_map(kv));
  ParameterList params = model->parameters();
  load_checkpoint(dir, params);
  return model;
}

}  // namespace ttvos
