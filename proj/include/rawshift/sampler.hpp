// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "rawshift/camlora.hpp"
#include "rawshift/image.hpp"
#include "rawshift/kernel.hpp"
#include "rawshift/model.hpp"
#include "rawshift/schedule.hpp"

namespace rawshift {

/// f(x_t, y0_full, t, c) -> x0 estimate with the shape of x_t.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Tensor<float> predict(const Tensor<float>& x_t, const RgbImage& y0_full, int t, CameraLabel camera) const = 0;
};

/// Test-only: returns the ground truth it was built with.
class OracleDenoiser final : public Denoiser {
 public:
  explicit OracleDenoiser(Tensor<float> x0);
  Tensor<float> predict(const Tensor<float>& x_t, const RgbImage& y0_full, int t, CameraLabel camera) const override;

 private:
  Tensor<float> x0_;
};

/// Returns align_rgb(y0), i.e. assumes a zero residual.
class IdentityDenoiser final : public Denoiser {
 public:
  Tensor<float> predict(const Tensor<float>& x_t, const RgbImage& y0_full, int t, CameraLabel camera) const override;
};

/// Per-camera scalar map a * align_rgb(y0) + b, fitted by least squares.
class AffineDenoiser final : public Denoiser {
 public:
  struct Coeffs {
    double a = 1.0;
    double b = 0.0;
  };

  void set(CameraLabel camera, Coeffs c) { coeffs_[camera] = c; }
  const Coeffs& coeffs(CameraLabel camera) const;

  /// Fits one (a, b) per camera label over all pixels of the given pairs.
  static AffineDenoiser fit(const std::vector<RawImage>& raws, const std::vector<RgbImage>& rgbs);

  Tensor<float> predict(const Tensor<float>& x_t, const RgbImage& y0_full, int t, CameraLabel camera) const override;

 private:
  std::map<CameraLabel, Coeffs> coeffs_;
};

/// The trained network. Effective per-camera weights are materialized on
/// first use; the model and bank must outlive the denoiser.
class ModelDenoiser final : public Denoiser {
 public:
  ModelDenoiser(const TinyDenoiser<float>& model, const AdapterBank<float>& bank) : model_(model), bank_(bank) {}
  Tensor<float> predict(const Tensor<float>& x_t, const RgbImage& y0_full, int t, CameraLabel camera) const override;

 private:
  const TinyDenoiser<float>& model_;
  const AdapterBank<float>& bank_;
  mutable std::mutex mu_;
  mutable std::map<CameraLabel, std::shared_ptr<const EffectiveWeights<float>>> weights_;
};

struct SamplerConfig {
  Schedule schedule = make_schedule(ScheduleConfig{});
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // per-image stream index
  bool record_trajectory = false;
};

struct SampleResult {
  Tensor<float> x0;                            // clamped to [-1, 1]
  std::vector<NoisyState<float>> trajectory;   // x_T .. x_0 when recorded
  std::size_t degenerate = 0;                  // posterior elements with pinned gamma
};

/// x_T = y0 + kappa sqrt(eta_T) w_hat_T eps with w_hat_T from y0 alone.
NoisyState<float> init_xT(const Tensor<float>& y0_packed, const Schedule& sched, Rng& rng);

/// Reverse chain from x_T to x_0. Throws std::runtime_error naming the
/// timestep when the state or the prediction turns non-finite.
SampleResult sample(const RgbImage& y0_full, CameraLabel camera, const Denoiser& denoiser, const SamplerConfig& cfg);

}  // namespace rawshift
