#include "ttvos/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "ttvos/errors.hpp"
#include "ttvos/ops.hpp"
#include "ttvos/tape.hpp"
#include "ttvos/tracker.hpp"

namespace ttvos {

namespace fs = std::filesystem;

TrainConfig TrainConfig::for_stage(Stage s) {
  TrainConfig c;
  c.stage = s;
  c.clip_length = s == Stage::kPretrain ? 3 : 8;
  return c;
}

void TrainConfig::validate() const {
  if (clip_length < 2) throw ConfigError("clip length must be >= 2");
  if (!(lr > 0)) throw ConfigError("learning rate must be > 0");
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (lambda_tc < 0) throw ConfigError("lambda_tc must be >= 0");
}

namespace {

void dump_non_finite(const TtvosModel& model, const StepResult& r, std::size_t frame,
                     double ce, double tc) {
  std::cerr << "non-finite loss at frame " << frame + 1 << " (ce " << ce << ", tc " << tc
            << ")\n";
  for (const auto& p : model.parameters()) {
    if (!all_finite(p.tensor)) std::cerr << "  parameter " << p.name << " holds non-finite values\n";
  }
  for (std::size_t i = 0; i < r.heats.size(); ++i) {
    if (!all_finite(r.heats[i].logits)) std::cerr << "  object " << i + 1 << " logits are non-finite\n";
    if (i < r.pi_hat.size() && !all_finite(r.pi_hat[i].pi))
      std::cerr << "  object " << i + 1 << " transition prediction is non-finite\n";
  }
}

double mean_object_j(const LabelMap& pred, const LabelMap& gt, int objects) {
  double s = 0.0;
  for (int id = 1; id <= objects; ++id) s += jaccard(pred.indicator(id), gt.indicator(id));
  return s / objects;
}

}  // namespace

ClipStats train_clip(const TtvosModel& model, const Clip& clip, const LossConfig& loss_cfg) {
  ClipStats stats;
  if (clip.length() < 2) throw InputError("training clip needs at least two frames");
  const int n = clip.objects();
  if (n < 1) {
    stats.skipped = true;
    stats.warning = "clip has no objects in its first frame";
    return stats;
  }
  for (int id = 1; id <= n; ++id) {
    if (clip.masks.front().count(id) == 0) {
      stats.skipped = true;
      stats.warning = "object " + std::to_string(id) + " is missing from the first frame";
      return stats;
    }
    bool seen = false;
    for (std::size_t t = 1; t < clip.length() && !seen; ++t) seen = clip.masks[t].count(id) > 0;
    if (!seen) {
      stats.skipped = true;
      stats.warning = "object " + std::to_string(id) + " vanishes after the first frame";
      return stats;
    }
  }

  Tracker tracker(model);
  TrackerState state = tracker.init(clip.frames[0], clip.masks[0]);
  const double norm = 1.0 / static_cast<double>((clip.length() - 1) * static_cast<std::size_t>(n));
  for (std::size_t t = 1; t < clip.length(); ++t) {
    Tape tape;
    TapeScope scope(tape);
    StepResult r = tracker.step(state, clip.frames[t], {true, true});
    Tensor frame_loss;
    double ce_sum = 0.0, tc_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const LabelMap gt = clip.masks[t].indicator(i + 1);
      const std::size_t k = static_cast<std::size_t>(i);
      Tensor ce = ce_loss(r.heats[k].logits, gt);
      Tensor tc = tc_loss(r.pi_hat[k], transition_target(Heatmap::from_mask(gt), r.used_heats[k]));
      ce_sum += ce.item();
      tc_sum += tc.item();
      Tensor l = total_loss(ce, tc, loss_cfg);
      frame_loss = frame_loss.defined() ? add(frame_loss, l) : l;
    }
    Tensor scaled = scale(frame_loss, norm);
    if (!std::isfinite(scaled.item())) {
      dump_non_finite(model, r, t, ce_sum, tc_sum);
      throw NumericError("non-finite training loss at frame " + std::to_string(t + 1));
    }
    tape.backward(scaled);
    stats.max_tape_nodes = std::max(stats.max_tape_nodes, tape.size());
    stats.loss += scaled.item();
    stats.ce += ce_sum * norm;
    stats.tc += tc_sum * norm;
    stats.mean_j += mean_object_j(r.labels, clip.masks[t], n);
    ++stats.frames;
  }
  stats.mean_j /= static_cast<double>(stats.frames);
  return stats;
}

std::vector<LabelMap> track_clip(const TtvosModel& model, const Clip& clip,
                                 std::vector<std::string>* warnings) {
  NoTapeScope no_tape;
  Tracker tracker(model);
  TrackerState state = tracker.init(clip.frames[0], clip.masks[0]);
  if (warnings) warnings->insert(warnings->end(), state.warnings.begin(), state.warnings.end());
  std::vector<LabelMap> out{clip.masks[0]};
  for (std::size_t t = 1; t < clip.length(); ++t) out.push_back(tracker.step(state, clip.frames[t]).labels);
  return out;
}

EvalReport evaluate_clips(const TtvosModel& model, const std::vector<std::string>& names,
                          const std::vector<Clip>& clips) {
  std::vector<ObjectScore> rows;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    auto seq = score_sequence(names[i], track_clip(model, clips[i]), clips[i].masks);
    rows.insert(rows.end(), seq.begin(), seq.end());
  }
  return summarize(std::move(rows));
}

namespace {

Clip window(const Clip& c, std::size_t start, std::size_t length) {
  Clip out;
  for (std::size_t t = start; t < start + length; ++t) {
    out.frames.push_back(c.frames[t]);
    out.masks.push_back(c.masks[t]);
  }
  return out;
}

void write_log_header(std::ostream& os) {
  os << "epoch,steps,clips,skipped,loss,ce,tc,train_j,val_j,val_f,val_jf\n";
}

void write_log_row(std::ostream& os, const EpochLog& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.8f,%.8f,%.8f,%.6f,", e.epoch, e.steps, e.clips,
                e.skipped, e.loss, e.ce, e.tc, e.train_j);
  os << buf;
  if (e.has_val) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f\n", e.val_j, e.val_f, e.val_jf);
    os << buf;
  } else {
    os << ",,\n";
  }
}

}  // namespace

FitResult fit_clips(TtvosModel& model, const std::vector<Clip>& train,
                    const std::vector<std::string>& val_names, const std::vector<Clip>& val,
                    const TrainConfig& cfg, const fs::path& out_dir,
                    const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (train.empty()) throw InputError("no training sequences");
  FitResult result;
  std::mt19937_64 rng(cfg.seed);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  Adam adam(model.parameters(), adam_cfg);
  adam.zero_grad();
  const LossConfig loss_cfg{cfg.lambda_tc};

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir / "ckpt");
    log.open(out_dir / "log.csv");
    if (!log) throw IoError("cannot write " + (out_dir / "log.csv").string());
    write_log_header(log);
  }

  std::size_t steps = 0;
  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochLog e;
    e.epoch = epoch;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t pending = 0;
    for (std::size_t idx : order) {
      const Clip& seq = train[idx];
      Clip clip;
      if (cfg.stage == TrainConfig::Stage::kPretrain) {
        clip = gen_affine_clip(seq.frames[0], seq.masks[0], cfg.clip_length, cfg.affine, rng());
      } else if (seq.length() > cfg.clip_length) {
        std::uniform_int_distribution<std::size_t> start(0, seq.length() - cfg.clip_length);
        clip = window(seq, start(rng), cfg.clip_length);
      } else {
        clip = seq;
      }
      ClipStats s = train_clip(model, clip, loss_cfg);
      if (s.skipped) {
        ++e.skipped;
        result.warnings.push_back("epoch " + std::to_string(epoch) + ", sequence " +
                                  std::to_string(idx) + ": skipped: " + s.warning);
        continue;
      }
      ++e.clips;
      e.loss += s.loss;
      e.ce += s.ce;
      e.tc += s.tc;
      e.train_j += s.mean_j;
      if (++pending == cfg.batch) {
        adam.step();
        adam.zero_grad();
        pending = 0;
        ++steps;
      }
    }
    if (pending > 0) {
      adam.step();
      adam.zero_grad();
      ++steps;
    }
    if (e.clips > 0) {
      const double c = static_cast<double>(e.clips);
      e.loss /= c;
      e.ce /= c;
      e.tc /= c;
      e.train_j /= c;
    }
    e.steps = steps;
    if (!val.empty()) {
      const EvalReport rep = evaluate_clips(model, val_names, val);
      e.has_val = true;
      e.val_j = rep.mean_j;
      e.val_f = rep.mean_f;
      e.val_jf = rep.jf;
    }
    const double score = e.has_val ? e.val_jf : -e.loss;
    const bool improved = !have_best || score > result.best_score;
    if (improved) {
      have_best = true;
      result.best_score = score;
      result.best_epoch = epoch;
    }
    if (!out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03zu", epoch);
      model.save(out_dir / "ckpt" / name);
      if (improved) model.save(out_dir / "ckpt" / "best");
      write_log_row(log, e);
      log.flush();
    }
    result.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  return result;
}

FitResult fit(TtvosModel& model, const fs::path& data_root, const fs::path& val_root,
              const TrainConfig& cfg, const fs::path& out_dir,
              const std::function<void(const EpochLog&)>& on_epoch) {
  std::vector<Clip> train;
  for (const auto& name : list_sequences(data_root)) train.push_back(read_sequence(data_root / name));
  if (train.empty()) throw IoError("no sequences under " + data_root.string());
  std::vector<std::string> val_names;
  std::vector<Clip> val;
  if (!val_root.empty()) {
    for (const auto& name : list_sequences(val_root)) {
      val_names.push_back(name);
      val.push_back(read_sequence(val_root / name));
    }
  }
  return fit_clips(model, train, val_names, val, cfg, out_dir, on_epoch);
}

}  // namespace ttvos
