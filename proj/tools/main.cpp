// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// rawshift command-line front end.
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 verification failure.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rawshift/analysis.hpp"
#include "rawshift/checkpoint.hpp"
#include "rawshift/manifest.hpp"
#include "rawshift/metrics.hpp"
#include "rawshift/parallel.hpp"
#include "rawshift/sampler.hpp"
#include "rawshift/synth.hpp"
#include "rawshift/tensor_io.hpp"
#include "rawshift/trainer.hpp"
#include "rawshift/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rawshift;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path default_out() {
  const char* env = std::getenv("RAWSHIFT_OUT");
  return env && *env ? fs::path(env) : fs::path("rawshift_out");
}

void write_json_file(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t cameras = 1;
  fs::path camera_file;
  bool identity = false;
  std::size_t count = 8;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  int first_label = 0;
  double highlights = 0.5;
  fs::path out;
};

int cmd_synth(const SynthArgs& a) {
  if (a.size < 16 || a.size % 2) throw UsageError("--size must be even and >= 16");
  if (a.count < 1) throw UsageError("--count must be >= 1");
  SynthConfig cfg;
  if (!a.camera_file.empty()) {
    std::ifstream f(a.camera_file);
    if (!f) throw FormatError("cannot read camera file " + a.camera_file.string());
    for (const json& j : json::parse(f)) cfg.cameras.push_back(SyntheticCamera::from_json(j));
  } else if (a.identity) {
    cfg.cameras.assign(a.cameras, SyntheticCamera::identity());
  } else {
    for (std::size_t i = 0; i < a.cameras; ++i) cfg.cameras.push_back(SyntheticCamera::preset(i));
  }
  if (cfg.cameras.empty()) throw UsageError("no cameras requested");
  cfg.count = a.count;
  cfg.size = a.size;
  cfg.seed = a.seed;
  cfg.first_label = a.first_label;
  cfg.scene.highlight_probability = a.highlights;
  const Manifest m = synth_dataset(cfg, a.out);
  json cams = json::array();
  for (std::size_t i = 0; i < cfg.cameras.size(); ++i) {
    json c = cfg.cameras[i].to_json();
    c["label"] = cfg.first_label + static_cast<int>(i);
    cams.push_back(c);
  }
  write_json_file(a.out / "cameras.json", cams);
  std::cout << (a.out / "manifest.json").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ScheduleArgs {
  std::optional<int> steps;
  std::optional<double> kappa;
  std::optional<double> bias;

  Schedule make(std::optional<Schedule> base) const {
    ScheduleConfig c;
    if (base) {
      if (steps && *steps != base->steps()) throw UsageError("--T cannot change on resume");
      return Schedule(std::vector<double>(base->etas().begin(), base->etas().end()), kappa.value_or(base->kappa()),
                      bias.value_or(base->bias()));
    }
    if (steps) c.steps = *steps;
    if (kappa) c.kappa = *kappa;
    if (bias) c.bias = *bias;
    try {
      return make_schedule(c);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

struct OptimArgs {
  std::string kind = "adam";
  std::optional<double> lr_max, lr_min;

  OptimizerConfig make(std::size_t total) const {
    OptimizerConfig c;
    if (kind == "momentum") {
      c.kind = OptimizerKind::momentum;
      c.lr_max = 2e-2;
      c.lr_min = 2e-3;
    } else if (kind != "adam") {
      throw UsageError("--optimizer must be momentum or adam");
    }
    if (lr_max) c.lr_max = *lr_max;
    if (lr_min) c.lr_min = *lr_min;
    c.total_steps = total;
    return c;
  }
};

void add_optim_flags(CLI::App* sc, OptimArgs& o) {
  sc->add_option("--optimizer", o.kind, "momentum or adam")->capture_default_str();
  sc->add_option("--lr-max", o.lr_max, "peak learning rate of the cosine schedule");
  sc->add_option("--lr-min", o.lr_min, "final learning rate of the cosine schedule");
}

std::ofstream open_loss_csv(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream f(dir / "loss.csv");
  if (!f) throw std::runtime_error("cannot write " + (dir / "loss.csv").string());
  write_loss_csv_header(f);
  return f;
}

struct TrainArgs {
  fs::path manifest;
  std::size_t steps = 2000;
  std::size_t batch = 8;
  std::size_t crop = 64;
  std::size_t width = 16;
  std::size_t rank = 4;
  std::size_t log_every = 50;
  bool label_blind = false;
  fs::path resume;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  ScheduleArgs sched;
  OptimArgs optim;
  fs::path out;
};

int cmd_train(const TrainArgs& a) {
  if (a.crop < 16 || a.crop % 2) throw UsageError("--crop must be even and >= 16");
  if (a.batch < 1 || a.steps < 1) throw UsageError("--batch and --steps must be positive");
  const Manifest manifest = read_manifest(a.manifest);
  if (manifest.entries.empty()) throw FormatError("manifest has no entries");
  std::set<CameraLabel> labels;
  for (const auto& e : manifest.entries) {
    if (!a.label_blind && e.camera.is_none())
      throw FormatError("manifest entry without a camera label: " + e.raw_path.string() + " (use --label-blind)");
    labels.insert(e.camera);
  }

  std::optional<Checkpoint> ck;
  if (!a.resume.empty()) {
    ck = load_checkpoint(a.resume);
  } else {
    const Schedule sched = a.sched.make(std::nullopt);
    Rng init_rng = Rng::stream(a.seed, 0xC0FFEE);
    Checkpoint fresh{TinyDenoiser<float>(DenoiserArch{a.width, sched.steps()}), {}, sched, 0, a.seed, a.rank};
    fresh.model.init(init_rng);
    fresh.model.register_adapter_layers(fresh.bank);
    ck = std::move(fresh);
  }
  if (!a.resume.empty()) ck->schedule = a.sched.make(ck->schedule);
  if (!a.label_blind) {
    Rng adapter_rng = Rng::stream(ck->seed, 0xADA);
    for (CameraLabel c : labels)
      if (!ck->bank.contains(c)) ck->bank.add_camera(c, ck->lora_rank, adapter_rng);
  }

  const std::size_t start = ck->step;
  Trainer trainer(ck->model, ck->bank, ck->schedule, a.optim.make(start + a.steps), start);
  const BatchSampler sampler(load_corpus(manifest, a.workers), a.crop, a.label_blind);
  TrainConfig cfg;
  cfg.steps = a.steps;
  cfg.batch_size = a.batch;
  cfg.crop = a.crop;
  cfg.seed = ck->seed;
  cfg.log_every = a.log_every;
  std::ofstream csv = open_loss_csv(a.out);
  train_loop(trainer, sampler, cfg, [&](const StepRecord& r) {
    write_loss_csv_row(csv, r);
    csv.flush();
    std::cerr << "step " << r.step << " loss " << r.loss.total << '\n';
  });
  ck->step = trainer.step_count();
  save_checkpoint(a.out, *ck);
  std::cout << a.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct AdaptArgs {
  fs::path checkpoint;
  fs::path manifest;
  std::optional<int> camera;
  std::size_t shots = 5;
  std::size_t steps = 300;
  std::size_t batch = 8;
  std::size_t crop = 64;
  std::size_t log_every = 50;
  std::optional<std::size_t> rank;
  std::optional<int> single_layer;
  std::uint64_t seed = 0;
  OptimArgs optim;
  fs::path out;
};

int cmd_adapt(const AdaptArgs& a) {
  if (a.shots < 1) throw UsageError("--shots must be >= 1");
  Checkpoint ck = load_checkpoint(a.checkpoint);
  const Manifest manifest = read_manifest(a.manifest);
  std::set<CameraLabel> present;
  for (const auto& e : manifest.entries) present.insert(e.camera);
  CameraLabel cam;
  if (a.camera) {
    cam = CameraLabel{*a.camera};
  } else if (present.size() == 1) {
    cam = *present.begin();
  } else {
    throw UsageError("manifest holds several cameras; pick one with --camera");
  }
  if (cam.is_none()) throw UsageError("adaptation needs a camera label >= 0");
  if (ck.bank.contains(cam)) throw FormatError("camera " + to_string(cam) + " already has an adapter in the checkpoint");

  Manifest shots;
  for (const auto& e : manifest.entries)
    if (e.camera == cam && shots.entries.size() < a.shots) shots.entries.push_back(e);
  if (shots.entries.size() < a.shots)
    throw FormatError("manifest has only " + std::to_string(shots.entries.size()) + " pairs for camera " +
                      to_string(cam));

  Rng adapter_rng = Rng::stream(a.seed, 0xADA);
  ck.bank.add_camera(cam, a.rank.value_or(ck.lora_rank), adapter_rng);
  Trainer trainer(ck.model, ck.bank, ck.schedule, a.optim.make(a.steps), 0);
  const BatchSampler sampler(load_corpus(shots), a.crop, false);
  TrainConfig cfg;
  cfg.steps = a.steps;
  cfg.batch_size = a.batch;
  cfg.crop = a.crop;
  cfg.seed = a.seed;
  cfg.log_every = a.log_every;
  cfg.mode = a.single_layer ? TrainMode::few_shot_single_layer : TrainMode::few_shot;
  cfg.single_layer = a.single_layer.value_or(-1);
  std::ofstream csv = open_loss_csv(a.out);
  train_loop(trainer, sampler, cfg, [&](const StepRecord& r) {
    if (!std::isfinite(r.loss.total)) throw std::runtime_error("adaptation diverged");
    write_loss_csv_row(csv, r);
  });
  save_checkpoint(a.out, ck);
  std::cout << a.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct ConvertArgs {
  fs::path checkpoint;
  fs::path rgb;
  fs::path manifest;
  std::optional<int> camera;
  std::string denoiser = "model";
  double black = 0.0;
  double white = 1.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  fs::path out;
};

struct ConvertJob {
  RgbImage rgb;
  CameraLabel camera;
  double black, white;
  std::optional<Tensor<float>> truth;
  fs::path out;
};

int cmd_convert(const ConvertArgs& a) {
  if (a.rgb.empty() == a.manifest.empty()) throw UsageError("give exactly one of --rgb or --manifest");
  if (a.denoiser == "oracle" && a.manifest.empty()) throw UsageError("the oracle denoiser needs --manifest ground truth");

  std::optional<Checkpoint> ck;
  std::unique_ptr<Denoiser> den;
  Schedule sched = make_schedule(ScheduleConfig{});
  if (a.denoiser == "model") {
    if (a.checkpoint.empty()) throw UsageError("--checkpoint is required for the model denoiser");
    ck = load_checkpoint(a.checkpoint);
    sched = ck->schedule;
    den = std::make_unique<ModelDenoiser>(ck->model, ck->bank);
  } else if (a.denoiser == "identity") {
    den = std::make_unique<IdentityDenoiser>();
  } else if (a.denoiser != "oracle") {
    throw UsageError("--denoiser must be model, identity or oracle");
  }
  if (!a.checkpoint.empty() && !ck) sched = load_checkpoint(a.checkpoint).schedule;

  std::vector<ConvertJob> jobs;
  if (!a.rgb.empty()) {
    const Tensor<float> rgb01 = read_tensor<float>(a.rgb);
    if (rgb01.rank() != 3 || rgb01.channels() != 3) throw FormatError("--rgb must hold a [3, 2H, 2W] tensor");
    fs::path out = a.out;
    if (out.extension() != ".sptr") out /= stem_of(a.rgb) + "_raw.sptr";
    jobs.push_back({RgbImage::from_unit(rgb01), CameraLabel{a.camera.value_or(-1)}, a.black, a.white, {}, out});
  } else {
    for (const auto& e : read_manifest(a.manifest).entries) {
      LoadedPair p = load_pair(e);
      jobs.push_back({std::move(p.rgb), a.camera ? CameraLabel{*a.camera} : e.camera, e.black_level, e.white_level,
                      a.denoiser == "oracle" ? std::optional<Tensor<float>>(p.raw.data()) : std::nullopt,
                      a.out / (stem_of(e.raw_path) + "_pred.sptr")});
    }
  }
  if (ck)
    for (const auto& j : jobs)
      if (!j.camera.is_none() && !ck->bank.contains(j.camera)) throw UnknownCameraError(j.camera);

  parallel_for(jobs.size(), a.workers, [&](std::size_t i) {
    const ConvertJob& j = jobs[i];
    SamplerConfig cfg{sched, a.seed, i, false};
    std::optional<OracleDenoiser> oracle;
    if (j.truth) oracle.emplace(*j.truth);
    const SampleResult r = sample(j.rgb, j.camera, oracle ? static_cast<const Denoiser&>(*oracle) : *den, cfg);
    if (j.out.has_parent_path()) fs::create_directories(j.out.parent_path());
    write_tensor(j.out, r.x0);
    fs::path meta = j.out;
    meta.replace_extension(".json");
    write_json_file(meta, {{"camera", j.camera.value},
                           {"black_level", j.black},
                           {"white_level", j.white},
                           {"seed", a.seed},
                           {"stream", i},
                           {"denoiser", a.denoiser},
                           {"schedule", sched.to_json()},
                           {"degenerate_elements", r.degenerate}});
    std::cout << j.out.string() << '\n';
  });
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path manifest;
  fs::path pred_dir;
  std::size_t workers = 1;
  fs::path out;
};

int cmd_eval(const EvalArgs& a) {
  const Manifest m = read_manifest(a.manifest);
  if (m.entries.empty()) throw FormatError("manifest has no entries");
  struct Row {
    QualityScore model, baseline;
  };
  std::vector<Row> rows(m.entries.size());
  parallel_for(rows.size(), a.workers, [&](std::size_t i) {
    const LoadedPair p = load_pair(m.entries[i]);
    const Tensor<float> pred = read_tensor<float>(a.pred_dir / (stem_of(m.entries[i].raw_path) + "_pred.sptr"));
    if (!pred.same_shape(p.raw.data()))
      throw FormatError("prediction shape " + shape_string(pred.shape()) + " differs from ground truth");
    rows[i] = {raw_quality(pred, p.raw.data()), raw_quality(align_rgb(p.rgb).data, p.raw.data())};
  });
  json images = json::array();
  double sp = 0, ss = 0, sb = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    images.push_back({{"raw_path", m.entries[i].raw_path.string()},
                      {"camera", m.entries[i].camera.value},
                      {"psnr", json_number(rows[i].model.psnr)},
                      {"ssim", json_number(rows[i].model.ssim)},
                      {"baseline_psnr", json_number(rows[i].baseline.psnr)}});
    sp += rows[i].model.psnr;
    ss += rows[i].model.ssim;
    sb += rows[i].baseline.psnr;
  }
  const double n = static_cast<double>(rows.size());
  const json report{{"images", images},
                    {"mean_psnr", json_number(sp / n)},
                    {"mean_ssim", json_number(ss / n)},
                    {"mean_baseline_psnr", json_number(sb / n)}};
  const fs::path out = a.out.extension() == ".json" ? a.out : a.out / "eval.json";
  write_json_file(out, report);
  std::cout << "mean psnr " << json_number(sp / n).dump() << " dB, mean ssim " << json_number(ss / n).dump()
            << ", identity baseline " << json_number(sb / n).dump() << " dB\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  fs::path manifest;
  std::size_t bins = 32;
  std::size_t workers = 1;
  fs::path out;
};

int cmd_stats(const StatsArgs& a) {
  if (a.bins < 8) throw UsageError("--bins must be >= 8");
  const CameraCurves curves = residual_stats(read_manifest(a.manifest), a.bins, a.workers);
  fs::create_directories(a.out);
  for (const auto& [cam, c] : curves) {
    const fs::path p = a.out / ("residuals_cam" + to_string(cam) + ".csv");
    write_residual_csv(p, c);
    std::cout << p.string() << '\n';
  }
  return 0;
}

struct SelectArgs {
  fs::path manifest;
  double fraction = 0.2;
  std::size_t workers = 1;
  fs::path out;
};

int cmd_select(const SelectArgs& a) {
  if (!(a.fraction > 0 && a.fraction <= 1)) throw UsageError("--fraction must lie in (0, 1]");
  const Manifest m = read_manifest(a.manifest);
  const auto ranked = rank_overexposed(m, a.fraction, a.workers);
  Manifest sub;
  for (const auto& r : ranked) {
    std::cout << r.saturation << ' ' << r.entry.rgb_path.string() << '\n';
    sub.entries.push_back(r.entry);
  }
  const fs::path out = a.out.extension() == ".json" ? a.out : a.out / "overexposed.json";
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_manifest(out, sub);
  std::cout << out.string() << '\n';
  return 0;
}

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t seed = 0;
  fs::path json_out;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<Suite> suites;
  if (a.suite == "all") {
    suites = all_suites();
  } else {
    try {
      suites.push_back(parse_suite(a.suite));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  json reports = json::array();
  bool ok = true;
  for (Suite s : suites) {
    const VerificationReport r = verify(s, a.seed);
    std::cout << r.to_text();
    reports.push_back(r.to_json());
    ok = ok && r.passed();
  }
  if (!a.json_out.empty()) write_json_file(a.json_out, suites.size() == 1 ? reports[0] : json{{"reports", reports}});
  return ok ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rawshift: RGB-to-RAW diffusion with per-camera low-rank adapters"};
  app.require_subcommand(1);
  const fs::path out0 = default_out();
  const std::size_t workers0 = default_workers();

  SynthArgs sy;
  sy.out = out0;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic paired corpus");
  s_synth->add_option("--cameras", sy.cameras, "number of preset cameras")->capture_default_str();
  s_synth->add_option("--camera-file", sy.camera_file, "JSON array of camera definitions");
  s_synth->add_flag("--identity", sy.identity, "use identity cameras");
  s_synth->add_option("--count", sy.count, "pairs per camera")->capture_default_str();
  s_synth->add_option("--size", sy.size, "full-resolution side, even, >= 16")->capture_default_str();
  s_synth->add_option("--seed", sy.seed)->capture_default_str();
  s_synth->add_option("--first-label", sy.first_label, "label of the first camera")->capture_default_str();
  s_synth->add_option("--highlights", sy.highlights, "probability of saturated highlights per image")
      ->check(CLI::Range(0.0, 1.0));
  s_synth->add_option("--out", sy.out, "output directory (default $RAWSHIFT_OUT)");

  TrainArgs tr;
  tr.out = out0 / "checkpoint";
  tr.workers = workers0;
  auto* s_train = app.add_subcommand("train", "train the denoiser");
  s_train->add_option("--manifest", tr.manifest)->required();
  s_train->add_option("--steps", tr.steps)->capture_default_str();
  s_train->add_option("--batch", tr.batch)->capture_default_str();
  s_train->add_option("--crop", tr.crop, "full-resolution crop side")->capture_default_str();
  s_train->add_option("--width", tr.width, "hidden channels")->capture_default_str();
  s_train->add_option("--rank", tr.rank, "adapter rank")->capture_default_str();
  s_train->add_option("--log-every", tr.log_every)->capture_default_str();
  s_train->add_flag("--label-blind", tr.label_blind, "ignore camera labels, no adapters");
  s_train->add_option("--resume", tr.resume, "checkpoint to continue from");
  s_train->add_option("--seed", tr.seed)->capture_default_str();
  s_train->add_option("--workers", tr.workers)->capture_default_str();
  s_train->add_option("--T", tr.sched.steps, "timesteps");
  s_train->add_option("--kappa", tr.sched.kappa, "noise scale");
  s_train->add_option("--bias", tr.sched.bias, "weight-map bias");
  add_optim_flags(s_train, tr.optim);
  s_train->add_option("--out", tr.out, "checkpoint directory");

  AdaptArgs ad;
  ad.out = out0 / "adapted";
  auto* s_adapt = app.add_subcommand("adapt", "fit an adapter for a new camera with a frozen base");
  s_adapt->add_option("--checkpoint", ad.checkpoint)->required();
  s_adapt->add_option("--manifest", ad.manifest)->required();
  s_adapt->add_option("--camera", ad.camera, "label of the new camera");
  s_adapt->add_option("--shots", ad.shots, "training pairs (1 and 5 are the presets)")->capture_default_str();
  s_adapt->add_option("--steps", ad.steps)->capture_default_str();
  s_adapt->add_option("--batch", ad.batch)->capture_default_str();
  s_adapt->add_option("--crop", ad.crop)->capture_default_str();
  s_adapt->add_option("--log-every", ad.log_every)->capture_default_str();
  s_adapt->add_option("--rank", ad.rank, "adapter rank (default: the checkpoint's)");
  s_adapt->add_option("--single-layer", ad.single_layer, "train only this adapted layer id");
  s_adapt->add_option("--seed", ad.seed)->capture_default_str();
  add_optim_flags(s_adapt, ad.optim);
  s_adapt->add_option("--out", ad.out, "output checkpoint directory");

  ConvertArgs cv;
  cv.out = out0 / "converted";
  cv.workers = workers0;
  auto* s_convert = app.add_subcommand("convert", "sample RAW from RGB");
  s_convert->add_option("--checkpoint", cv.checkpoint);
  s_convert->add_option("--rgb", cv.rgb, "RGB tensor [3, 2H, 2W] in [0, 1]");
  s_convert->add_option("--manifest", cv.manifest, "convert every RGB image in a manifest");
  s_convert->add_option("--camera", cv.camera, "camera label (default: none, or the manifest's)");
  s_convert->add_option("--denoiser", cv.denoiser, "model, identity or oracle")->capture_default_str();
  s_convert->add_option("--black", cv.black, "black level recorded for --rgb")->capture_default_str();
  s_convert->add_option("--white", cv.white, "white level recorded for --rgb")->capture_default_str();
  s_convert->add_option("--seed", cv.seed)->capture_default_str();
  s_convert->add_option("--workers", cv.workers)->capture_default_str();
  s_convert->add_option("--out", cv.out, "output .sptr file or directory");

  EvalArgs ev;
  ev.out = out0;
  ev.workers = workers0;
  auto* s_eval = app.add_subcommand("eval", "score converted outputs against ground truth");
  s_eval->add_option("--manifest", ev.manifest)->required();
  s_eval->add_option("--pred-dir", ev.pred_dir, "directory of <raw stem>_pred.sptr files")->required();
  s_eval->add_option("--workers", ev.workers)->capture_default_str();
  s_eval->add_option("--out", ev.out, "report .json file or directory");

  StatsArgs st;
  st.out = out0;
  st.workers = workers0;
  auto* s_stats = app.add_subcommand("stats", "residual-vs-intensity curves per camera");
  s_stats->add_option("--manifest", st.manifest)->required();
  s_stats->add_option("--bins", st.bins)->capture_default_str();
  s_stats->add_option("--workers", st.workers)->capture_default_str();
  s_stats->add_option("--out", st.out, "output directory");

  SelectArgs se;
  se.out = out0;
  se.workers = workers0;
  auto* s_select = app.add_subcommand("select", "pick the most over-exposed images");
  s_select->add_option("--manifest", se.manifest)->required();
  s_select->add_option("--fraction", se.fraction)->capture_default_str();
  s_select->add_option("--workers", se.workers)->capture_default_str();
  s_select->add_option("--out", se.out, "output manifest .json or directory");

  VerifyArgs vf;
  auto* s_verify = app.add_subcommand("verify", "run the statistical self-checks");
  s_verify->add_option("--suite", vf.suite, "marginal, posterior, degenerate, oracle_sampling, gradient or all")
      ->capture_default_str();
  s_verify->add_option("--seed", vf.seed)->capture_default_str();
  s_verify->add_option("--json", vf.json_out, "also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*s_synth) return cmd_synth(sy);
    if (*s_train) return cmd_train(tr);
    if (*s_adapt) return cmd_adapt(ad);
    if (*s_convert) return cmd_convert(cv);
    if (*s_eval) return cmd_eval(ev);
    if (*s_stats) return cmd_stats(st);
    if (*s_select) return cmd_select(se);
    if (*s_verify) return cmd_verify(vf);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
