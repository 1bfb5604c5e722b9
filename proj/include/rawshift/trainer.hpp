// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "rawshift/camlora.hpp"
#include "rawshift/loss.hpp"
#include "rawshift/manifest.hpp"
#include "rawshift/model.hpp"
#include "rawshift/optimizer.hpp"
#include "rawshift/schedule.hpp"

namespace rawshift {

/// One-camera batch: packed x0 [4, h, w] and full-resolution RGB [3, 2h, 2w].
struct TrainBatch {
  std::vector<Tensor<float>> x0;
  std::vector<RgbImage> rgb;
  CameraLabel camera;
};

struct StepRecord {
  std::size_t step = 0;  // 1-based global step after the update
  int t = 0;
  double lr = 0.0;
  LossBreakdown loss;
};

/// Sees the exact noisy inputs handed to the denoiser for one batch.
using BatchHook = std::function<void(const TrainBatch& batch, int t, const std::vector<Tensor<float>>& eps,
                                     const std::vector<Tensor<float>>& x_t)>;

class Trainer {
 public:
  Trainer(TinyDenoiser<float>& model, AdapterBank<float>& bank, Schedule schedule, OptimizerConfig opt,
          std::size_t start_step = 0);

  /// One gradient step: t ~ U{1..T} for the whole batch, per-image noise,
  /// marginal noisy inputs from ground truth, combined loss, one update of
  /// the parameters routed for (camera, mode). Throws std::runtime_error
  /// with t and the loss terms when the loss is not finite.
  StepRecord step(const TrainBatch& batch, Rng& rng, TrainMode mode = TrainMode::combined, int single_layer = -1);

  void set_batch_hook(BatchHook hook) { hook_ = std::move(hook); }
  std::size_t step_count() const noexcept { return step_; }
  const Schedule& schedule() const noexcept { return sched_; }

 private:
  TinyDenoiser<float>& model_;
  AdapterBank<float>& bank_;
  Schedule sched_;
  Optimizer<float> opt_;
  std::size_t step_;
  BatchHook hook_;
};

/// Draws random aligned crops from an in-memory corpus.
class BatchSampler {
 public:
  /// `crop` is the full-resolution side (even); packed crops are crop/2.
  /// With `label_blind`, batches mix cameras and carry no label.
  BatchSampler(std::vector<LoadedPair> data, std::size_t crop, bool label_blind = false);

  /// A batch from one camera chosen with probability proportional to its
  /// image count (any images when label-blind).
  TrainBatch next(std::size_t batch_size, Rng& rng) const;

  std::vector<CameraLabel> cameras() const;
  std::size_t size() const noexcept { return data_.size(); }

 private:
  std::vector<LoadedPair> data_;
  std::size_t crop_;
  bool blind_;
};

/// Crop of a pair at packed offset (py, px) with packed side `side`.
LoadedPair crop_pair(const LoadedPair& pair, std::size_t py, std::size_t px, std::size_t side);

std::vector<LoadedPair> load_corpus(const Manifest& manifest, std::size_t workers = 1);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 8;
  std::size_t crop = 64;
  TrainMode mode = TrainMode::combined;
  int single_layer = -1;
  std::uint64_t seed = 0;
  std::size_t log_every = 50;
};

/// Runs cfg.steps steps. Every log_every-th step (and no other) is passed to
/// `on_log` with the loss averaged over the steps since the previous log.
void train_loop(Trainer& trainer, const BatchSampler& sampler, const TrainConfig& cfg,
                const std::function<void(const StepRecord&)>& on_log = {});

void write_loss_csv_header(std::ostream& out);
void write_loss_csv_row(std::ostream& out, const StepRecord& r);

}  // namespace rawshift
