// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/trainer.hpp"

#include <cmath>
#include <ostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rawshift/kernel.hpp"
#include "rawshift/parallel.hpp"

namespace rawshift {

Trainer::Trainer(TinyDenoiser<float>& model, AdapterBank<float>& bank, Schedule schedule, OptimizerConfig opt,
                 std::size_t start_step)
    : model_(model), bank_(bank), sched_(std::move(schedule)), opt_(opt), step_(start_step) {
  if (sched_.steps() != model_.arch().timesteps)
    throw std::invalid_argument("trainer: schedule T differs from the denoiser's timestep count");
}

StepRecord Trainer::step(const TrainBatch& batch, Rng& rng, TrainMode mode, int single_layer) {
  const std::size_t n = batch.x0.size();
  if (n == 0 || batch.rgb.size() != n) throw std::invalid_argument("train_step: empty or ragged batch");
  const std::vector<CameraLabel> labels(n, batch.camera);
  const TrainableSet trainable = route_gradients(bank_, labels, mode, single_layer);

  const int t = rng.uniform_int(1, sched_.steps());
  std::vector<Tensor<float>> eps(n), xt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor<float>& x0 = batch.x0[i];
    const Tensor<float> y0 = align_rgb(batch.rgb[i]).data;
    require_same_shape(x0, y0, "train_step");
    Tensor<float> e0(x0.shape());
    for (std::size_t k = 0; k < x0.size(); ++k) e0[k] = y0[k] - x0[k];
    eps[i] = Tensor<float>(x0.shape());
    rng.fill_normal(eps[i].values());
    xt[i] = forward_marginal_from_noise(x0, e0, sched_, t, eps[i]);
  }
  if (hook_) hook_(batch, t, eps, xt);

  const EffectiveWeights<float> weights = model_.effective_weights(bank_, batch.camera);
  double total_elems = 0;
  for (const auto& x : batch.x0) total_elems += static_cast<double>(x.size());

  Gradients<float> grads = model_.make_gradients();
  StepRecord rec;
  rec.t = t;
  for (std::size_t i = 0; i < n; ++i) {
    typename TinyDenoiser<float>::Cache cache;
    const Tensor<float> pred = model_.forward(xt[i], batch.rgb[i].data(), t, weights, &cache);
    cache.camera = batch.camera;
    Tensor<float> g(pred.shape());
    rec.loss += combined_loss<float>(pred.values(), batch.x0[i].values(), kLogL1Epsilon, g.values(), total_elems);
    model_.backward(cache, g, bank_, grads);
  }
  if (!std::isfinite(rec.loss.total)) {
    std::ostringstream msg;
    msg << "train_step: non-finite loss at t=" << t << " (mse " << rec.loss.mse << ", l1 " << rec.loss.l1
        << ", log_l1 " << rec.loss.log_l1 << ")";
    throw std::runtime_error(msg.str());
  }

  rec.lr = cosine_lr(opt_.config(), step_);
  rec.step = ++step_;
  if (trainable.base) opt_.update("base", model_.params(), std::span<const float>(grads.base), rec.lr, rec.step);
  for (const auto& [layer, cam] : trainable.adapters) {
    const auto it = grads.adapters.find({layer, cam.value});
    if (it == grads.adapters.end()) continue;
    LoraAdapter<float>& a = bank_.adapter(layer, cam);
    const std::string key = std::to_string(layer) + "/" + std::to_string(cam.value);
    opt_.update("A" + key, a.A.values(), std::span<const float>(it->second.first.values()), rec.lr, rec.step);
    opt_.update("B" + key, a.B.values(), std::span<const float>(it->second.second.values()), rec.lr, rec.step);
  }
  return rec;
}

LoadedPair crop_pair(const LoadedPair& pair, std::size_t py, std::size_t px, std::size_t side) {
  const Tensor<float>& raw = pair.raw.data();
  if (side == 0 || py + side > raw.height() || px + side > raw.width())
    throw std::out_of_range("crop outside the image");
  Tensor<float> r({kPackedChannels, side, side});
  for (std::size_t c = 0; c < kPackedChannels; ++c)
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) r.at(c, y, x) = raw.at(c, py + y, px + x);
  const Tensor<float>& rgb = pair.rgb.data();
  Tensor<float> g({kRgbChannels, 2 * side, 2 * side});
  for (std::size_t c = 0; c < kRgbChannels; ++c)
    for (std::size_t y = 0; y < 2 * side; ++y)
      for (std::size_t x = 0; x < 2 * side; ++x) g.at(c, y, x) = rgb.at(c, 2 * py + y, 2 * px + x);
  return LoadedPair{RawImage(std::move(r), pair.raw.black_level(), pair.raw.white_level(), pair.raw.camera()),
                    RgbImage(std::move(g))};
}

BatchSampler::BatchSampler(std::vector<LoadedPair> data, std::size_t crop, bool label_blind)
    : data_(std::move(data)), crop_(crop), blind_(label_blind) {
  if (data_.empty()) throw std::invalid_argument("batch sampler: empty corpus");
  if (crop_ < 2 || crop_ % 2) throw std::invalid_argument("batch sampler: crop must be even");
  for (const auto& p : data_)
    if (p.raw.height() < crop_ / 2 || p.raw.width() < crop_ / 2)
      throw std::invalid_argument("batch sampler: crop larger than an image");
}

std::vector<CameraLabel> BatchSampler::cameras() const {
  std::set<CameraLabel> s;
  for (const auto& p : data_) s.insert(p.raw.camera());
  return {s.begin(), s.end()};
}

TrainBatch BatchSampler::next(std::size_t batch_size, Rng& rng) const {
  const int last = static_cast<int>(data_.size()) - 1;
  const CameraLabel cam = blind_ ? CameraLabel::none() : data_[static_cast<std::size_t>(rng.uniform_int(0, last))].raw.camera();
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (blind_ || data_[i].raw.camera() == cam) pool.push_back(i);
  const std::size_t side = crop_ / 2;
  TrainBatch b;
  b.camera = cam;
  for (std::size_t k = 0; k < batch_size; ++k) {
    const LoadedPair& p = data_[pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))]];
    const auto py = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(p.raw.height() - side)));
    const auto px = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(p.raw.width() - side)));
    LoadedPair c = crop_pair(p, py, px, side);
    b.x0.push_back(c.raw.data());
    b.rgb.push_back(std::move(c.rgb));
  }
  return b;
}

std::vector<LoadedPair> load_corpus(const Manifest& manifest, std::size_t workers) {
  std::vector<std::optional<LoadedPair>> slots(manifest.entries.size());
  parallel_for(slots.size(), workers, [&](std::size_t i) { slots[i].emplace(load_pair(manifest.entries[i])); });
  std::vector<LoadedPair> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void train_loop(Trainer& trainer, const BatchSampler& sampler, const TrainConfig& cfg,
                const std::function<void(const StepRecord&)>& on_log) {
  const std::size_t log_every = std::max<std::size_t>(cfg.log_every, 1);
  LossBreakdown window;
  std::size_t in_window = 0;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    // One stream per global step, so a resumed run draws what an
    // uninterrupted run would have drawn.
    Rng rng = Rng::stream(cfg.seed, trainer.step_count());
    const TrainBatch batch = sampler.next(cfg.batch_size, rng);
    StepRecord r = trainer.step(batch, rng, cfg.mode, cfg.single_layer);
    window += r.loss;
    ++in_window;
    if ((s + 1) % log_every == 0) {
      const double k = static_cast<double>(in_window);
      r.loss = LossBreakdown{window.mse / k, window.l1 / k, window.log_l1 / k, window.total / k, r.loss.epsilon};
      if (on_log) on_log(r);
      window = {};
      in_window = 0;
    }
  }
}

void write_loss_csv_header(std::ostream& out) { out << "step,t,lr,mse,l1,log_l1,total\n"; }

void write_loss_csv_row(std::ostream& out, const StepRecord& r) {
  out << r.step << ',' << r.t << ',' << r.lr << ',' << r.loss.mse << ',' << r.loss.l1 << ',' << r.loss.log_l1 << ','
      << r.loss.total << '\n';
}

}  // namespace rawshift
