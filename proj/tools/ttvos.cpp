// Command-line front end: gen-data, train, track, eval, profile, grad-check.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "ttvos/datagen.hpp"
#include "ttvos/errors.hpp"
#include "ttvos/grad_suite.hpp"
#include "ttvos/image_io.hpp"
#include "ttvos/metrics.hpp"
#include "ttvos/profiler.hpp"
#include "ttvos/run_config.hpp"
#include "ttvos/trainer.hpp"

namespace fs = std::filesystem;
using namespace ttvos;

namespace {

enum Exit : int {
  kOk = 0,
  kFailed = 1,  // the command ran but its check did not pass
  kCli = 2,
  kConfig = 3,
  kInput = 4,
  kIo = 5,
  kDimension = 6,
  kUsage = 7,
  kNumeric = 8,
  kInternal = 9,
};

int exit_code(const Error& e) {
  const std::string c = e.category();
  if (c == "config") return kConfig;
  if (c == "input") return kInput;
  if (c == "io") return kIo;
  if (c == "dimension") return kDimension;
  if (c == "usage") return kUsage;
  if (c == "numeric") return kNumeric;
  return kInternal;
}

int fail(const char* category, const std::string& msg, int code) {
  std::string one_line = msg;
  std::replace(one_line.begin(), one_line.end(), '\n', ' ');
  std::cerr << "error: " << category << ": " << one_line << "\n";
  return code;
}

// Config keys are long option names with '-' written as '_'. Flags given on
// the command line win; keys unknown to the selected subcommand are errors.
void merge_config(CLI::App* sub, const RunConfig& cfg) {
  for (const auto& [key, value] : cfg.entries) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt = sub->get_option_no_throw("--" + flag);
    if (opt == nullptr || flag == "config" || flag == "help") {
      throw ConfigError("unknown config key '" + key + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required ") + flag);
}

std::string seq_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "seq_%03zu", i);
  return buf;
}

void apply_ablations(const std::vector<std::string>& ablate, ModelConfig& model, double* lambda) {
  for (const auto& a : ablate) {
    if (a == "short") model.short_matching = false;
    else if (a == "long") model.long_matching = false;
    else if (a == "update") model.template_update = false;
    else if (a == "boxinit") model.box_init = true;
    else if (a == "tc" && lambda) *lambda = 0.0;
    else throw ConfigError("unknown ablation '" + a + "' (short|long|update|tc|boxinit)");
  }
}

struct GenArgs {
  std::string kind = "shapes";
  std::size_t n = 25, length = 0, objects = 2, height = 64, width = 112;
  std::uint64_t seed = 1;
  std::string source, out = "seqs";
};

int run_gen(const GenArgs& a) {
  if (a.kind != "shapes" && a.kind != "affine") {
    throw ConfigError("--kind must be shapes or affine, got '" + a.kind + "'");
  }
  if (a.objects < 1) throw ConfigError("--objects must be >= 1");
  const std::size_t length = a.length ? a.length : (a.kind == "shapes" ? 16 : 3);
  std::mt19937_64 rng(a.seed);
  std::vector<Clip> sources;
  if (a.kind == "affine" && !a.source.empty()) {
    for (const auto& name : list_sequences(a.source)) sources.push_back(read_sequence(fs::path(a.source) / name));
    if (sources.empty()) throw IoError("no sequences under " + a.source);
  }
  for (std::size_t i = 0; i < a.n; ++i) {
    const std::uint64_t seed = rng();
    const std::size_t objects = 1 + static_cast<std::size_t>(rng() % a.objects);
    Clip clip;
    if (a.kind == "shapes") {
      clip = gen_shape_clip(length, objects, a.height, a.width, seed);
    } else {
      Clip still = sources.empty() ? gen_shape_clip(1, objects, a.height, a.width, seed)
                                   : sources[i % sources.size()];
      clip = gen_affine_clip(still.frames[0], still.masks[0], length, AffineRanges{}, seed ^ 0x9e3779b97f4a7c15ULL);
    }
    write_sequence(fs::path(a.out) / seq_name(i), clip);
  }
  std::cout << "wrote " << a.n << " " << a.kind << " sequences of " << length << " frames to "
            << a.out << "\n";
  return kOk;
}

struct TrainArgs {
  std::string stage = "main", data, val, out, init;
  std::size_t epochs = 10, batch = 1, clip_length = 0;
  double lr = 1e-4, lambda_tc = 5.0;
  std::uint64_t seed = 1;
  std::vector<std::string> ablate;
  bool tiny = false;
};

int run_train(const TrainArgs& a) {
  require(a.data, "--data");
  require(a.out, "--out");
  TrainConfig cfg;
  if (a.stage == "main") cfg = TrainConfig::for_stage(TrainConfig::Stage::kMain);
  else if (a.stage == "pretrain") cfg = TrainConfig::for_stage(TrainConfig::Stage::kPretrain);
  else throw ConfigError("--stage must be pretrain or main, got '" + a.stage + "'");
  if (a.clip_length) cfg.clip_length = a.clip_length;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.lr = a.lr;
  cfg.lambda_tc = a.lambda_tc;
  cfg.seed = a.seed;
  cfg.validate();

  std::unique_ptr<TtvosModel> model;
  if (!a.init.empty()) {
    model = TtvosModel::load(a.init);
    ModelConfig probe = model->config();
    apply_ablations(a.ablate, probe, &cfg.lambda_tc);
    if (!(probe == model->config())) {
      throw ConfigError("--ablate changes the architecture of the --init checkpoint");
    }
  } else {
    ModelConfig mc = a.tiny ? ModelConfig::tiny() : ModelConfig{};
    apply_ablations(a.ablate, mc, &cfg.lambda_tc);
    model = std::make_unique<TtvosModel>(mc);
    model->init(a.seed);
  }

  FitResult r = fit(*model, a.data, a.val, cfg, a.out, [](const EpochLog& e) {
    std::printf("epoch %3zu  loss %.5f  ce %.5f  tc %.5f  train J %.3f", e.epoch, e.loss, e.ce, e.tc,
                e.train_j);
    if (e.has_val) std::printf("  val J %.3f F %.3f J&F %.3f", e.val_j, e.val_f, e.val_jf);
    std::printf("\n");
    std::fflush(stdout);
  });
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("best epoch %zu, checkpoint %s\n", r.best_epoch, (fs::path(a.out) / "ckpt" / "best").c_str());
  return kOk;
}

struct TrackArgs {
  std::string model, seq, out;
  bool no_template_update = false, box_init = false;
};

// Frames of one sequence plus its first-frame mask; later masks are optional.
Clip read_for_tracking(const fs::path& dir) {
  if (!fs::is_directory(dir / "frames")) throw IoError("missing directory " + (dir / "frames").string());
  std::vector<fs::path> frames;
  for (const auto& e : fs::directory_iterator(dir / "frames"))
    if (e.path().extension() == ".ppm") frames.push_back(e.path());
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) throw IoError("no frames in " + (dir / "frames").string());
  Clip clip;
  for (const auto& f : frames) clip.frames.push_back(read_ppm(f));
  clip.masks.push_back(read_pgm(dir / "masks" / (frames.front().stem().string() + ".pgm")));
  return clip;
}

void track_one(const TtvosModel& model, const fs::path& dir, const fs::path& out) {
  Clip clip = read_for_tracking(dir);
  std::vector<std::string> warnings;
  auto labels = track_clip(model, clip, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << dir.filename().string() << ": " << w << "\n";
  fs::create_directories(out);
  for (std::size_t t = 0; t < labels.size(); ++t) write_pgm(out / frame_name(t, "pgm"), labels[t]);
}

int run_track(const TrackArgs& a) {
  require(a.model, "--model");
  require(a.seq, "--seq");
  require(a.out, "--out");
  auto loaded = TtvosModel::load(a.model);
  ModelConfig mc = loaded->config();
  std::unique_ptr<TtvosModel> model = std::move(loaded);
  if (a.no_template_update || a.box_init) {
    // Inference-only switches: same parameters, different recurrence.
    mc.template_update = mc.template_update && !a.no_template_update;
    mc.box_init = mc.box_init || a.box_init;
    auto switched = std::make_unique<TtvosModel>(mc);
    auto dst = switched->parameters();
    auto src = model->parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      auto d = dst[i].tensor.mutable_data();
      auto s = src[i].tensor.data();
      std::copy(s.begin(), s.end(), d.begin());
    }
    model = std::move(switched);
  }
  const fs::path seq(a.seq);
  std::size_t count = 0;
  if (fs::is_directory(seq / "frames")) {
    track_one(*model, seq, a.out);
    count = 1;
  } else {
    for (const auto& name : list_sequences(seq)) {
      track_one(*model, seq / name, fs::path(a.out) / name);
      ++count;
    }
    if (count == 0) throw IoError("no sequences under " + a.seq);
  }
  std::cout << "tracked " << count << " sequence(s) into " << a.out << "\n";
  return kOk;
}

struct EvalArgs {
  std::string pred, gt, out;
};

int run_eval(const EvalArgs& a) {
  require(a.pred, "--pred");
  require(a.gt, "--gt");
  require(a.out, "--out");
  EvalReport rep = evaluate(a.pred, a.gt);
  fs::create_directories(a.out);
  rep.write_csv(fs::path(a.out) / "report.csv");
  std::cout << rep.table();
  return kOk;
}

struct ProfileArgs {
  std::string model, out;
  std::size_t height = 64, width = 112, objects = 1;
  std::vector<std::string> ablate;
};

int run_profile(const ProfileArgs& a) {
  std::unique_ptr<TtvosModel> model;
  if (!a.model.empty()) {
    model = TtvosModel::load(a.model);
  } else {
    ModelConfig mc;
    apply_ablations(a.ablate, mc, nullptr);
    model = std::make_unique<TtvosModel>(mc);
  }
  FlopReport rep = profile_model(*model, a.height, a.width, a.objects);
  std::cout << rep.table();
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream os(fs::path(a.out) / "flops.csv");
    if (!os) throw IoError("cannot write " + (fs::path(a.out) / "flops.csv").string());
    rep.write_csv(os);
  } else {
    rep.write_csv(std::cout);
  }
  return kOk;
}

struct GradArgs {
  bool all = false;
  double tolerance = 1e-6;
  std::uint64_t seed = 1234;
};

int run_grad(const GradArgs& a) {
  if (!a.all) throw ConfigError("grad-check runs the full suite only; pass --all");
  GradCheckOptions opts;
  opts.tolerance = a.tolerance;
  opts.seed = a.seed;
  bool ok = true;
  std::printf("%-30s %14s %8s %6s  %s\n", "block", "max rel err", "coords", "kinks", "worst");
  for (const auto& row : run_grad_suite(opts)) {
    const auto& r = row.report;
    ok = ok && r.passed;
    std::printf("%-30s %14.3e %8zu %6zu  %s%s\n", row.block.c_str(), r.max_rel_error, r.checked,
                r.skipped_kinks, r.worst.c_str(), r.passed ? "" : "  FAIL");
  }
  std::printf("%s (tolerance %.1e)\n", ok ? "all blocks pass" : "gradient check failed", a.tolerance);
  return ok ? kOk : kFailed;
}

std::string find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string s = argv[i];
    if (s == "--config" && i + 1 < argc) return argv[i + 1];
    if (s.rfind("--config=", 0) == 0) return s.substr(9);
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ttvos: template-tracking video object segmentation at desk scale"};
  app.require_subcommand(1);
  app.footer(
      "Every option may also be set in a --config file as key=value (dashes written as\n"
      "underscores, '#' comments); command-line flags win. Exit codes: 0 ok, 1 check failed,\n"
      "2 command line, 3 config, 4 input, 5 io, 6 dimension, 7 usage, 8 numeric, 9 internal.");
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value config file");
  };

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "write procedural sequences in DAVIS layout");
  g->add_option("--kind", gen.kind, "shapes | affine")->capture_default_str();
  g->add_option("--n", gen.n, "number of sequences")->capture_default_str();
  g->add_option("--length", gen.length, "frames per sequence (default 16 shapes, 3 affine)");
  g->add_option("--objects", gen.objects, "maximum objects per sequence")->capture_default_str();
  g->add_option("--height", gen.height)->capture_default_str();
  g->add_option("--width", gen.width)->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--source", gen.source, "affine: sequences whose first frames are warped");
  g->add_option("--out", gen.out, "output root")->capture_default_str();
  add_config(g);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train a model, writing log.csv and checkpoints");
  t->add_option("--stage", tr.stage, "pretrain | main")->capture_default_str();
  t->add_option("--data", tr.data, "training sequences root");
  t->add_option("--val", tr.val, "validation sequences root");
  t->add_option("--out", tr.out, "run directory");
  t->add_option("--init", tr.init, "start from this checkpoint");
  t->add_option("--epochs", tr.epochs)->capture_default_str();
  t->add_option("--batch", tr.batch, "clips per optimizer step")->capture_default_str();
  t->add_option("--clip-length", tr.clip_length, "frames per clip (default 3 pretrain, 8 main)");
  t->add_option("--lr", tr.lr)->capture_default_str();
  t->add_option("--lambda-tc", tr.lambda_tc, "temporal-consistency weight")->capture_default_str();
  t->add_option("--seed", tr.seed)->capture_default_str();
  t->add_option("--ablate", tr.ablate, "short|long|update|tc|boxinit")->delimiter(',');
  t->add_flag("--tiny", tr.tiny, "reduced channel widths");
  add_config(t);

  TrackArgs tk;
  auto* k = app.add_subcommand("track", "write one label PGM per frame");
  k->add_option("--model", tk.model, "checkpoint directory");
  k->add_option("--seq", tk.seq, "a sequence directory or a root of sequences");
  k->add_option("--out", tk.out, "output directory");
  k->add_flag("--no-template-update", tk.no_template_update, "keep the first long-term template");
  k->add_flag("--box-init", tk.box_init, "initialize from first-frame bounding boxes");
  add_config(k);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score predictions against ground truth");
  e->add_option("--pred", ev.pred, "predictions root (<seq>/%05d.pgm)");
  e->add_option("--gt", ev.gt, "ground-truth sequences root");
  e->add_option("--out", ev.out, "directory for report.csv");
  add_config(e);

  ProfileArgs pr;
  auto* p = app.add_subcommand("profile", "per-stage FLOP and parameter counts");
  p->add_option("--model", pr.model, "checkpoint directory (default: untrained default model)");
  p->add_option("--height", pr.height)->capture_default_str();
  p->add_option("--width", pr.width)->capture_default_str();
  p->add_option("--objects", pr.objects)->capture_default_str();
  p->add_option("--ablate", pr.ablate, "short|long|update|boxinit")->delimiter(',');
  p->add_option("--out", pr.out, "directory for flops.csv (default: print it)");
  add_config(p);

  GradArgs gc;
  auto* c = app.add_subcommand("grad-check", "finite-difference gradient suite");
  c->add_flag("--all", gc.all, "check every block");
  c->add_option("--tolerance", gc.tolerance)->capture_default_str();
  c->add_option("--seed", gc.seed)->capture_default_str();
  add_config(c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& s) {
    return app.exit(s);
  } catch (const CLI::ParseError& err) {
    return fail("cli", err.what(), kCli);
  }

  try {
    const std::string cfg_file = find_config(argc, argv);
    if (!cfg_file.empty()) {
      const RunConfig cfg = RunConfig::load(cfg_file);
      for (CLI::App* sub : app.get_subcommands()) merge_config(sub, cfg);
    }
    if (g->parsed()) return run_gen(gen);
    if (t->parsed()) return run_train(tr);
    if (k->parsed()) return run_track(tk);
    if (e->parsed()) return run_eval(ev);
    if (p->parsed()) return run_profile(pr);
    if (c->parsed()) return run_grad(gc);
    return fail("cli", "no subcommand", kCli);
  } catch (const CLI::ParseError& err) {
    return fail("config", err.what(), kConfig);
  } catch (const Error& err) {
    return fail(err.category(), err.what(), exit_code(err));
  } catch (const std::exception& err) {
    return fail("internal", err.what(), kInternal);
  }
}
