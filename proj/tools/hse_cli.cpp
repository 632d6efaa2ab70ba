// hse: analyze, hybridize, train, enhance and evaluate speech-enhancement
// models.
#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hse/calibration.h"
#include "hse/checkpoint.h"
#include "hse/complexity.h"
#include "hse/data.h"
#include "hse/design.h"
#include "hse/error.h"
#include "hse/metrics.h"
#include "hse/pipeline.h"
#include "hse/shipped.h"
#include "hse/trainer.h"
#include "hse/wav.h"

namespace fs = std::filesystem;
using namespace hse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBudget = 3;
constexpr int kExitGeometry = 4;
constexpr int kExitRuntime = 1;

struct Common {
  std::string crelu_variant;
  std::string input_mode;
};

// A config path, or the name of a shipped model.
ModelSpec resolve_model(const std::string& ref, const Common& c) {
  if (ref.empty()) throw ConfigError("--model is required");
  ModelSpec s;
  if (fs::exists(ref)) {
    s = load_spec(ref);
  } else {
    bool known = false;
    for (const std::string& n : shipped_names()) known = known || n == ref;
    if (!known) throw ConfigError("model config not found: " + ref);
    s = shipped_spec(ref);
  }
  if (!c.crelu_variant.empty()) s.crelu_variant = parse_crelu_variant(c.crelu_variant);
  if (!c.input_mode.empty()) s.input_mode = parse_input_mode(c.input_mode);
  validate(s);
  return s;
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is required");
  if (!fs::is_regular_file(path)) throw ConfigError(what + " not found: " + path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void prepare_out(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  fs::create_directories(dir);
}

Model load_model(const std::string& ckpt_path, const std::string& model_ref,
                 const Common& c) {
  require_file(ckpt_path, "--checkpoint");
  const Checkpoint ck = load_checkpoint(ckpt_path);
  if (!model_ref.empty()) {
    const ModelSpec want = resolve_model(model_ref, c);
    if (spec_hash(want) != spec_hash(ck.spec)) {
      throw GeometryError("checkpoint was written for '" + ck.spec.name +
                          "', which does not match --model " + model_ref);
    }
  }
  return model_from_checkpoint(ck);
}

std::vector<double> parse_snrs(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad SNR value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty SNR list");
  return out;
}

// --- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::vector<std::string> models;
  std::string out;
  std::size_t frames = kDefaultFrames;
  bool zero_costs = false;
};

int cmd_analyze(const AnalyzeArgs& a, const Common& c) {
  if (a.models.empty()) throw ConfigError("--model is required");
  if (a.frames == 0) throw ConfigError("--frames must be at least 1");
  std::vector<ModelSpec> specs;
  for (const std::string& m : a.models) specs.push_back(resolve_model(m, c));
  if (!a.out.empty()) prepare_out(a.out);
  const MacCosts costs = a.zero_costs ? MacCosts::zero() : MacCosts{};
  std::vector<ComplexityReport> reports;
  for (const ModelSpec& s : specs) {
    ComplexityReport r = count_macs(s, a.frames, costs);
    std::cout << render_report(r) << '\n';
    if (!a.out.empty()) {
      write_text(fs::path(a.out) / (s.name + ".txt"), render_report(r));
      write_text(fs::path(a.out) / (s.name + ".csv"), render_report_csv(r));
    }
    reports.push_back(std::move(r));
  }
  if (reports.size() >= 2) {
    const std::string table = render_compare(compare(reports));
    std::cout << table;
    if (!a.out.empty()) write_text(fs::path(a.out) / "compare.txt", table);
  }
  return kExitOk;
}

// --- hybridize ------------------------------------------------------------

struct HybridizeArgs {
  std::string model;
  std::string out;
  double tol = 0.02;
};

int cmd_hybridize(const HybridizeArgs& a, const Common& c) {
  const ModelSpec real = resolve_model(a.model, c);
  if (real.domain != Domain::kReal) {
    throw ConfigError("hybridize needs a real-domain model, '" + real.name +
                      "' is " + domain_name(real.domain));
  }
  if (a.tol < 0.0) throw ConfigError("--tol must be non-negative");
  prepare_out(a.out);
  DesignOptions opt;
  opt.tol = a.tol;
  const DesignResult h = hybridize(real, opt);
  const DesignResult x = derive_complex(real, opt);
  save_spec(h.spec, (fs::path(a.out) / (h.spec.name + ".json")).string());
  save_spec(x.spec, (fs::path(a.out) / (x.spec.name + ".json")).string());
  std::ostringstream os;
  os << "budget N_f " << encoder_budget(real) << "  N_g " << decoder_budget(real)
     << "  tol " << a.tol << '\n'
     << h.spec.name << '\n' << render_checks(h.checks)
     << x.spec.name << '\n' << render_checks(x.checks);
  write_text(fs::path(a.out) / "summary.txt", os.str());
  std::cout << os.str();
  return kExitOk;
}

// --- init -----------------------------------------------------------------

struct InitArgs {
  std::string model;
  std::string out;
  std::string debug;
  std::uint64_t seed = 0;
};

int cmd_init(const InitArgs& a, const Common& c) {
  Model m(resolve_model(a.model, c));
  if (a.out.empty()) throw ConfigError("--out is required");
  if (a.debug.empty()) {
    m.init(a.seed);
  } else if (a.debug == "identity") {
    m.init_debug(DebugInit::kIdentity);
  } else if (a.debug == "zero") {
    m.init_debug(DebugInit::kZero);
  } else {
    throw ConfigError("--debug must be identity or zero");
  }
  const fs::path parent = fs::path(a.out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  save_checkpoint(make_checkpoint(m), a.out);
  std::cout << "wrote " << a.out << " (" << m.param_count() << " params)\n";
  return kExitOk;
}

// --- export-config --------------------------------------------------------

int cmd_export(const std::string& model, const std::string& out, const Common& c) {
  const ModelSpec s = resolve_model(model, c);
  if (out.empty()) {
    std::cout << to_json(s) << '\n';
  } else {
    save_spec(s, out);
  }
  return kExitOk;
}

// --- calibrate ------------------------------------------------------------

int cmd_calibrate() {
  for (Family f : {Family::kCdae, Family::kCrn}) {
    std::cout << render_calibration(f, calibrate(f));
  }
  return kExitOk;
}

// --- train ----------------------------------------------------------------

struct TrainArgs {
  std::string model;
  std::string manifest;
  std::string out;
  std::string resume;
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  std::size_t batch = 4;
  std::size_t pairs = 64;
  std::size_t eval_pairs = 4;
  double seconds = 10.0;
  double lr_init = 1e-3;
  double lr_final = 1e-4;
  double weight_decay = 1e-4;
  bool coupled_l2 = false;
};

int cmd_train(const TrainArgs& a, const Common& c) {
  require_file(a.manifest, "--manifest");
  if (a.out.empty()) throw ConfigError("--out is required");
  if (!(a.seconds > 0.0)) throw ConfigError("--seconds must be positive");
  const Manifest man = load_manifest(a.manifest);

  std::optional<Checkpoint> ck;
  if (!a.resume.empty()) {
    require_file(a.resume, "--resume");
    ck = load_checkpoint(a.resume);
  }
  ModelSpec spec;
  if (!a.model.empty()) {
    spec = resolve_model(a.model, c);
    if (ck && spec_hash(spec) != spec_hash(ck->spec)) {
      throw GeometryError("--resume checkpoint does not match --model " + a.model);
    }
  } else if (ck) {
    spec = ck->spec;
  } else {
    throw ConfigError("--model is required");
  }

  const std::size_t length = static_cast<std::size_t>(std::lround(a.seconds * kSampleRate));
  const Sources src = sources_from(man);
  GeneratedPairs train_pairs(src.speech, src.noise, derive_seed(a.seed, 1, 0), a.pairs, length);
  GeneratedPairs eval_pairs(src.speech, src.noise, derive_seed(a.seed, 2, 0),
                            std::max<std::size_t>(a.eval_pairs, 1), length);

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.lr_init = a.lr_init;
  cfg.lr_final = a.lr_final;
  cfg.weight_decay = a.weight_decay;
  cfg.coupled_l2 = a.coupled_l2;
  cfg.seed = a.seed;
  cfg.out_dir = a.out;
  cfg.eval_pairs = a.eval_pairs;
  validate(cfg);

  Model model(spec);
  model.init(a.seed);
  Trainer trainer(model, train_pairs, cfg, &eval_pairs);
  if (ck) trainer.resume(*ck);
  save_spec(spec, (fs::path(a.out) / "model.json").string());
  while (trainer.epochs_done() < cfg.epochs) {
    const HistoryRow r = trainer.run_epoch();
    std::printf("epoch %u lr %.3e loss %.4f eval_si_sdr %.3f eval_stoi %.4f\n",
                r.epoch, r.lr, r.mean_loss, r.eval_si_sdr, r.eval_stoi);
    std::fflush(stdout);
  }
  const HistoryRow& last = trainer.history().back();
  std::printf("done: %zu epochs, final loss %.4f, eval SI-SDR %.3f dB, STOI %.4f\n",
              trainer.epochs_done(), last.mean_loss, last.eval_si_sdr, last.eval_stoi);
  return kExitOk;
}

// --- enhance --------------------------------------------------------------

struct EnhanceArgs {
  std::string checkpoint;
  std::string model;
  std::string in;
  std::string out;
  bool float_out = false;
};

int cmd_enhance(const EnhanceArgs& a, const Common& c) {
  require_file(a.in, "--in");
  if (a.out.empty()) throw ConfigError("--out is required");
  const Model m = load_model(a.checkpoint, a.model, c);
  const AudioClip noisy = wav_read(a.in);
  if (noisy.size() < 4 * kHop + kFftSize) {
    throw ConfigError("input is too short to enhance (" +
                      std::to_string(noisy.size()) + " samples)");
  }
  const AudioClip out = enhance(m, noisy);
  wav_write(a.out, out, a.float_out ? WavFormat::kFloat32 : WavFormat::kPcm16);
  std::cout << "wrote " << a.out << ": " << out.size() << " samples (input "
            << noisy.size() << ", trimmed " << noisy.size() - out.size() << ")\n";
  return kExitOk;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string model;
  std::string manifest;
  std::string out;
  std::string snrs = "-5,0,10,20";
  std::size_t clips = 4;
  double seconds = 10.0;
  std::uint64_t seed = 0;
};

int cmd_eval(const EvalArgs& a, const Common& c) {
  require_file(a.manifest, "--manifest");
  const std::vector<double> snrs = parse_snrs(a.snrs);
  if (a.clips == 0) throw ConfigError("--clips must be at least 1");
  const Model m = load_model(a.checkpoint, a.model, c);
  const Sources src = sources_from(load_manifest(a.manifest));
  const std::size_t length = static_cast<std::size_t>(std::lround(a.seconds * kSampleRate));
  if (!a.out.empty()) prepare_out(a.out);

  std::vector<ClipMetrics> noisy_rows, model_rows;
  std::vector<std::pair<std::string, ClipMetrics>> csv;
  for (std::size_t b = 0; b < snrs.size(); ++b) {
    for (std::size_t i = 0; i < a.clips; ++i) {
      // Clip i uses the same speech and noise in every bucket.
      std::mt19937_64 rng(derive_seed(a.seed, 3, i));
      const AudioClip clean = assemble(*src.speech, length, rng);
      const AudioClip noise = assemble(*src.noise, length, rng);
      const AudioClip noisy = mix_at_snr(clean, noise, snrs[b]).mixture;
      const std::size_t frames = frame_count(length);
      const AudioClip ref = interior(clean, frames);
      const AudioClip base = interior(noisy, frames);
      const AudioClip est = enhance(m, noisy);
      auto score = [&](const AudioClip& x) {
        ClipMetrics cm;
        cm.id = "clip" + std::to_string(i);
        cm.snr_db = snrs[b];
        cm.si_sdr = si_sdr(x, ref);
        try {
          cm.stoi = stoi(x, ref);
        } catch (const ConfigError&) {
          cm.stoi = std::nan("");
        }
        return cm;
      };
      noisy_rows.push_back(score(base));
      model_rows.push_back(score(est));
      csv.emplace_back("noisy", noisy_rows.back());
      csv.emplace_back(m.spec().name, model_rows.back());
    }
  }
  const std::vector<TableRow> table{{"noisy", summarize(noisy_rows, snrs)},
                                    {m.spec().name, summarize(model_rows, snrs)}};
  const std::string text = render_metric_table(table);
  std::cout << text;
  if (!a.out.empty()) {
    write_text(fs::path(a.out) / "metrics.txt", text);
    write_text(fs::path(a.out) / "metrics.csv", render_metric_csv(csv));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "hse: real, complex and hybrid speech-enhancement models.\n"
      "Options marked with an environment variable can also be set through it.\n"
      "Exit codes: 0 ok, 1 runtime failure, 2 config/input error, 3 budget "
      "infeasible, 4 geometry mismatch."};
  app.require_subcommand(1);
  Common common;
  app.add_option("--crelu-variant", common.crelu_variant, "printed or corrected")
      ->envname("HSE_CRELU_VARIANT");
  app.add_option("--input-mode", common.input_mode, "warped or raw_complex")
      ->envname("HSE_INPUT_MODE");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "parameter and MAC report");
  analyze->add_option("--model", an.models, "config path or shipped name (repeatable)")
      ->envname("HSE_MODEL");
  analyze->add_option("--out", an.out, "report directory")->envname("HSE_OUT");
  analyze->add_option("--frames", an.frames, "frames for MAC totals")
      ->envname("HSE_FRAMES");
  analyze->add_flag("--zero-activation-costs", an.zero_costs,
                    "book 0 MACs for activations and conversions");

  HybridizeArgs hy;
  auto* hyb = app.add_subcommand("hybridize", "derive hybrid and complex configs");
  hyb->add_option("--model", hy.model, "real model config")->envname("HSE_MODEL");
  hyb->add_option("--out", hy.out, "output directory")->envname("HSE_OUT");
  hyb->add_option("--tol", hy.tol, "relative budget tolerance")->envname("HSE_TOL");

  InitArgs in;
  auto* init = app.add_subcommand("init", "write an initial checkpoint");
  init->add_option("--model", in.model, "model config")->envname("HSE_MODEL");
  init->add_option("--out", in.out, "checkpoint path")->envname("HSE_OUT");
  init->add_option("--seed", in.seed, "init seed")->envname("HSE_SEED");
  init->add_option("--debug", in.debug, "identity or zero output");

  std::string ex_model, ex_out;
  auto* exp = app.add_subcommand("export-config", "print or save a model config");
  exp->add_option("--model", ex_model, "config path or shipped name")->envname("HSE_MODEL");
  exp->add_option("--out", ex_out, "output file")->envname("HSE_OUT");

  auto* cal = app.add_subcommand("calibrate", "rerun the kernel geometry search");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--model", tr.model, "model config")->envname("HSE_MODEL");
  train->add_option("--manifest", tr.manifest, "dataset manifest")->envname("HSE_MANIFEST");
  train->add_option("--out", tr.out, "checkpoint directory")->envname("HSE_OUT");
  train->add_option("--resume", tr.resume, "checkpoint to continue from")->envname("HSE_RESUME");
  train->add_option("--seed", tr.seed, "seed")->envname("HSE_SEED");
  train->add_option("--epochs", tr.epochs, "epochs")->envname("HSE_EPOCHS");
  train->add_option("--batch", tr.batch, "clips per step")->envname("HSE_BATCH");
  train->add_option("--pairs-per-epoch", tr.pairs, "training pairs per epoch");
  train->add_option("--eval-pairs", tr.eval_pairs, "held-out pairs scored per epoch");
  train->add_option("--seconds", tr.seconds, "clip length");
  train->add_option("--lr-init", tr.lr_init, "initial learning rate");
  train->add_option("--lr-final", tr.lr_final, "final learning rate");
  train->add_option("--weight-decay", tr.weight_decay, "weight decay");
  train->add_flag("--coupled-l2", tr.coupled_l2, "L2 in the gradient instead of decoupled decay");

  EnhanceArgs en;
  auto* enh = app.add_subcommand("enhance", "enhance a WAV file");
  enh->add_option("--checkpoint", en.checkpoint, "checkpoint")->envname("HSE_CHECKPOINT");
  enh->add_option("--model", en.model, "expected model config")->envname("HSE_MODEL");
  enh->add_option("--in", en.in, "noisy WAV");
  enh->add_option("--out", en.out, "enhanced WAV")->envname("HSE_OUT");
  enh->add_flag("--float", en.float_out, "write float32 samples");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "SNR-bucketed STOI and SI-SDR table");
  eval->add_option("--checkpoint", ev.checkpoint, "checkpoint")->envname("HSE_CHECKPOINT");
  eval->add_option("--model", ev.model, "expected model config")->envname("HSE_MODEL");
  eval->add_option("--manifest", ev.manifest, "dataset manifest")->envname("HSE_MANIFEST");
  eval->add_option("--out", ev.out, "report directory")->envname("HSE_OUT");
  eval->add_option("--snr", ev.snrs, "comma-separated SNR buckets in dB");
  eval->add_option("--clips", ev.clips, "clips per bucket");
  eval->add_option("--seconds", ev.seconds, "clip length");
  eval->add_option("--seed", ev.seed, "seed")->envname("HSE_SEED");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*analyze) return cmd_analyze(an, common);
    if (*hyb) return cmd_hybridize(hy, common);
    if (*init) return cmd_init(in, common);
    if (*exp) return cmd_export(ex_model, ex_out, common);
    if (*cal) return cmd_calibrate();
    if (*train) return cmd_train(tr, common);
    if (*enh) return cmd_enhance(en, common);
    if (*eval) return cmd_eval(ev, common);
  } catch (const BudgetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const GeometryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitGeometry;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
