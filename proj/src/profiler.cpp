#include "ttvos/profiler.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "ttvos/errors.hpp"
#include "ttvos/tape.hpp"
#include "ttvos/tracker.hpp"

namespace ttvos {

std::uint64_t flops_conv(std::uint64_t c_in, std::uint64_t c_out, std::uint64_t k,
                         std::uint64_t groups, std::uint64_t h_out, std::uint64_t w_out) {
  if (groups == 0 || c_in % groups != 0 || c_out % groups != 0) {
    throw ConfigError("channels " + std::to_string(c_in) + "->" + std::to_string(c_out) +
                      " are not divisible by " + std::to_string(groups) + " groups");
  }
  return flops::conv2d(c_in, c_out, k, groups, h_out, w_out);
}

std::uint64_t FlopReport::stage_total(const std::string& stage) const {
  std::uint64_t s = 0;
  for (const auto& r : rows)
    if (r.stage == stage) s += r.flops;
  return s;
}

void FlopReport::write_csv(std::ostream& os) const {
  os << "layer,stage,flops,params\n";
  for (const auto& r : rows) os << r.name << ',' << r.stage << ',' << r.flops << ',' << r.params << '\n';
}

std::string FlopReport::table() const {
  std::ostringstream os;
  char buf[128];
  auto line = [&](const char* label, double v, const char* unit) {
    std::snprintf(buf, sizeof buf, "%-8s %12.4f %s\n", label, v, unit);
    os << buf;
  };
  os << "input " << height << "x" << width << ", " << objects << " object(s), per frame\n";
  line("Read", read_flops / 1e6, "MFLOP");
  line("Seg", seg_flops / 1e6, "MFLOP");
  line("Update", update_flops / 1e6, "MFLOP");
  line("Decode", decode_flops / 1e6, "MFLOP");
  line("Params", params / 1e6, "M");
  if (seg_flops > 0) {
    std::snprintf(buf, sizeof buf, "update/seg %.2f%%\n", 100.0 * update_flops / seg_flops);
    os << buf;
  }
  return os.str();
}

namespace {

class Accumulator {
 public:
  explicit Accumulator(const TtvosModel& model) {
    for (const auto& p : model.parameters()) {
      const auto dot = p.name.rfind('.');
      params_[p.name.substr(0, dot)] += p.tensor.numel();
    }
  }

  void add(const std::string& name, const char* stage, std::uint64_t flops) {
    const std::string key = name + '\n' + stage;
    auto it = index_.find(key);
    if (it == index_.end()) {
      it = index_.emplace(key, rows_.size()).first;
      rows_.push_back({name, stage, 0, 0});
    }
    rows_[it->second].flops += flops;
  }

  void conv(const Conv2d& c, const char* stage, std::size_t h_in, std::size_t w_in,
            bool activation) {
    const std::size_t ho = c.out_extent(h_in), wo = c.out_extent(w_in);
    std::uint64_t f = flops_conv(c.in_channels(), c.out_channels(), c.kernel(), c.groups(), ho, wo);
    if (activation) f += flops::elementwise(c.out_channels() * ho * wo);
    add(c.name(), stage, f);
  }

  std::vector<LayerFlops> finish() {
    // Parameters go on the first row of each layer; idle layers get a row of their own.
    std::map<std::string, bool> placed;
    for (auto& r : rows_) {
      auto it = params_.find(r.name);
      if (it != params_.end() && !placed[r.name]) {
        r.params = it->second;
        placed[r.name] = true;
      }
    }
    for (const auto& [name, n] : params_)
      if (!placed[name]) rows_.push_back({name, "-", 0, n});
    return rows_;
  }

 private:
  std::map<std::string, std::uint64_t> params_;
  std::map<std::string, std::size_t> index_;
  std::vector<LayerFlops> rows_;
};

}  // namespace

FlopReport profile_model(const TtvosModel& model, std::size_t height, std::size_t width,
                         std::size_t objects) {
  if (height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0) {
    throw ConfigError("profile extent " + std::to_string(height) + "x" + std::to_string(width) +
                      " is not a positive multiple of 16");
  }
  if (objects < 1) throw ConfigError("profile needs at least one object");
  const ModelConfig& cfg = model.config();
  const std::size_t h2 = height / 2, w2 = width / 2, h4 = height / 4, w4 = width / 4;
  const std::size_t h8 = height / 8, w8 = width / 8, h16 = height / 16, w16 = width / 16;
  const std::size_t hw8 = h8 * w8;
  const std::size_t ctp = cfg.c_tp;
  using namespace stage;

  Accumulator acc(model);
  const Backbone& bb = model.backbone;
  acc.conv(bb.stem(), kSeg, height, width, true);
  acc.conv(bb.down4(), kSeg, h2, w2, true);
  acc.conv(bb.refine4(), kSeg, h4, w4, true);
  acc.conv(bb.down8(), kSeg, h4, w4, true);
  acc.conv(bb.refine8(), kSeg, h8, w8, true);
  acc.conv(bb.down16(), kSeg, h8, w8, true);
  acc.conv(bb.refine16(), kSeg, h16, w16, true);

  const ShortTermMatcher& st = model.short_term;
  const TemplateAttention& ta = model.attention;
  const Decoder& dec = model.decoder;
  const std::uint64_t pool16 = flops::avg_pool2d(16, 2 * h16 * w16);
  const std::uint64_t pool8 = flops::avg_pool2d(8, 2 * hw8);
  auto masked_feature = [&](const char* stage) {
    acc.add("tattn.heat_pool", stage, pool8);
    acc.conv(ta.mask_conv(), stage, h8, w8, true);
  };
  auto branch = [&](TemplateAttention::Branch b, const char* stage) {
    acc.conv(ta.pointwise(b), stage, h8, w8, true);
    acc.conv(ta.grouped(b), stage, h8, w8, false);
  };

  for (std::size_t obj = 0; obj < objects; ++obj) {
    if (cfg.short_matching) {
      acc.conv(st.project(), kSeg, h16, w16, false);
      acc.add("short.correlate", kSeg, flops::elementwise(cfg.c_st * h16 * w16));
      acc.conv(st.fuse(), kSeg, h16, w16, false);
      acc.add("short.upsample", kSeg, flops::bilinear(cfg.c_sim * hw8));
    } else {
      acc.add("short.heat_pool", kSeg, pool16);
      acc.conv(st.concat1(), kSeg, h16, w16, true);
      acc.conv(st.concat2(), kSeg, h16, w16, true);
      acc.add("short.upsample", kSeg, flops::bilinear(cfg.c_sim * hw8));
    }
    if (cfg.long_matching) {
      masked_feature(kSeg);
      branch(TemplateAttention::Branch::kQ, kRead);
      acc.add("tattn.read", kRead, flops::matmul(ctp, ctp, hw8));
      acc.conv(ta.fusion(), kSeg, h8, w8, true);
    } else {
      acc.add("tattn.heat_pool", kSeg, pool8);
      acc.conv(ta.concat1(), kSeg, h8, w8, true);
      acc.conv(ta.concat2(), kSeg, h8, w8, true);
    }

    acc.conv(dec.merge(), kDecode, h8, w8, false);
    const ConvTranspose2d& up = dec.up();
    acc.add(up.name(), kDecode,
            flops::conv_transpose2d(up.in_channels(), up.out_channels(), up.kernel(), h8, w8, h4, w4));
    acc.conv(dec.skip(), kDecode, h4, w4, false);
    acc.add("decoder.skip_add", kDecode, flops::elementwise(cfg.c_dec * h4 * w4));
    acc.conv(dec.refine(), kDecode, h4, w4, true);
    acc.conv(dec.head(), kDecode, h4, w4, false);
    acc.add("decoder.softmax", kDecode, flops::softmax(2 * height * width));
  }

  // Template refresh after aggregation.
  for (std::size_t obj = 0; obj < objects; ++obj) {
    if (cfg.short_matching) {
      acc.add("short.heat_pool", kSeg, pool16);
      acc.conv(st.embed1(), kSeg, h16, w16, true);
      acc.conv(st.embed2(), kSeg, h16, w16, true);
    }
    if (cfg.long_matching && cfg.template_update) {
      masked_feature(kUpdate);
      branch(TemplateAttention::Branch::kF, kUpdate);
      branch(TemplateAttention::Branch::kG, kUpdate);
      acc.add("tattn.gram", kUpdate, flops::matmul(ctp, hw8, ctp));
      acc.add("tattn.softmax", kUpdate, flops::softmax(ctp * ctp));
      acc.add("tattn.blend", kUpdate, 3 * flops::elementwise(ctp * ctp));
    }
  }

  FlopReport rep;
  rep.height = height;
  rep.width = width;
  rep.objects = objects;
  rep.rows = acc.finish();
  rep.read_flops = rep.stage_total(kRead);
  rep.seg_flops = rep.stage_total(kSeg);
  rep.update_flops = rep.stage_total(kUpdate);
  rep.decode_flops = rep.stage_total(kDecode);
  for (const auto& p : model.parameters()) rep.params += p.tensor.numel();
  return rep;
}

FlopCounter measure_step_flops(const TtvosModel& model, std::size_t height, std::size_t width,
                               std::size_t objects) {
  if (objects < 1) throw ConfigError("profile needs at least one object");
  NoTapeScope no_tape;
  Tensor frame(Shape{3, height, width});
  LabelMap gt(height, width);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      gt.at(y, x) = static_cast<int>(x * (objects + 1) / width);
  Tracker tracker(model);
  TrackerState state = tracker.init(frame, gt);
  FlopCounter counter;
  {
    FlopCounterScope scope(counter);
    tracker.step(state, frame);
  }
  return counter;
}

}  // namespace ttvos
