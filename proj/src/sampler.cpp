// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rawshift/simd/kernels.hpp"

namespace rawshift {
namespace {

void require_finite(const Tensor<float>& x, const char* what, int t) {
  for (float v : x.values())
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("sampler: non-finite ") + what + " at timestep " + std::to_string(t));
}

}  // namespace

OracleDenoiser::OracleDenoiser(Tensor<float> x0) : x0_(std::move(x0)) {
  if (x0_.rank() != 3 || x0_.channels() != kPackedChannels)
    throw std::invalid_argument("oracle denoiser needs a ground-truth [4, H, W] tensor");
}

Tensor<float> OracleDenoiser::predict(const Tensor<float>& x_t, const RgbImage&, int, CameraLabel) const {
  require_same_shape(x_t, x0_, "oracle denoiser");
  return x0_;
}

Tensor<float> IdentityDenoiser::predict(const Tensor<float>& x_t, const RgbImage& y0_full, int, CameraLabel) const {
  Tensor<float> y = align_rgb(y0_full).data;
  require_same_shape(x_t, y, "identity denoiser");
  return y;
}

const AffineDenoiser::Coeffs& AffineDenoiser::coeffs(CameraLabel camera) const {
  const auto it = coeffs_.find(camera);
  if (it == coeffs_.end()) throw UnknownCameraError(camera);
  return it->second;
}

AffineDenoiser AffineDenoiser::fit(const std::vector<RawImage>& raws, const std::vector<RgbImage>& rgbs) {
  if (raws.size() != rgbs.size() || raws.empty()) throw std::invalid_argument("affine fit: need matching non-empty pairs");
  struct Sums {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  };
  std::map<CameraLabel, Sums> acc;
  for (std::size_t i = 0; i < raws.size(); ++i) {
    const Tensor<float> y = align_rgb(rgbs[i]).data;
    require_same_shape(y, raws[i].data(), "affine fit");
    Sums& s = acc[raws[i].camera()];
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double xv = y[k], yv = raws[i].data()[k];
      s.n += 1;
      s.sx += xv;
      s.sy += yv;
      s.sxx += xv * xv;
      s.sxy += xv * yv;
    }
  }
  AffineDenoiser out;
  for (const auto& [cam, s] : acc) {
    const double var = s.sxx - s.sx * s.sx / s.n;
    Coeffs c;
    c.a = var > 0 ? (s.sxy - s.sx * s.sy / s.n) / var : 0.0;
    c.b = (s.sy - c.a * s.sx) / s.n;
    out.set(cam, c);
  }
  return out;
}

Tensor<float> AffineDenoiser::predict(const Tensor<float>& x_t, const RgbImage& y0_full, int, CameraLabel camera) const {
  const Coeffs& c = coeffs(camera);
  Tensor<float> y = align_rgb(y0_full).data;
  require_same_shape(x_t, y, "affine denoiser");
  for (float& v : y.values()) v = static_cast<float>(c.a * v + c.b);
  return y;
}

Tensor<float> ModelDenoiser::predict(const Tensor<float>& x_t, const RgbImage& y0_full, int t, CameraLabel camera) const {
  std::shared_ptr<const EffectiveWeights<float>> w;
  {
    std::lock_guard lock(mu_);
    auto& slot = weights_[camera];
    if (!slot) {
      try {
        slot = std::make_shared<const EffectiveWeights<float>>(model_.effective_weights(bank_, camera));
      } catch (...) {
        weights_.erase(camera);
        throw;
      }
    }
    w = slot;
  }
  return model_.forward(x_t, y0_full.data(), t, *w);
}

NoisyState<float> init_xT(const Tensor<float>& y0_packed, const Schedule& sched, Rng& rng) {
  const int T = sched.steps();
  const Tensor<float> zero(y0_packed.shape());
  Tensor<float> eps(y0_packed.shape());
  rng.fill_normal(eps.values());
  // The marginal kernel with x0 := y0 and e0 := 0 is exactly the init formula.
  const simd::MarginalCoeffs<float> c{0.0f, static_cast<float>(sched.kappa() * std::sqrt(sched.eta(T))),
                                      static_cast<float>(sched.bias())};
  NoisyState<float> out{Tensor<float>(y0_packed.shape()), T};
  simd::marginal(y0_packed.data(), zero.data(), eps.data(), y0_packed.size(), c, out.x.data());
  return out;
}

SampleResult sample(const RgbImage& y0_full, CameraLabel camera, const Denoiser& denoiser, const SamplerConfig& cfg) {
  const Schedule& sched = cfg.schedule;
  const Tensor<float> y0 = align_rgb(y0_full).data;
  Rng rng = Rng::stream(cfg.seed, cfg.stream);
  SampleResult out;
  NoisyState<float> state = init_xT(y0, sched, rng);
  require_finite(state.x, "initial state", state.t);
  if (cfg.record_trajectory) out.trajectory.push_back(state);
  Tensor<float> e_hat(y0.shape());
  for (int t = sched.steps(); t >= 1; --t) {
    const Tensor<float> x_hat = denoiser.predict(state.x, y0_full, t, camera);
    require_same_shape(x_hat, state.x, "denoiser output");
    require_finite(x_hat, "prediction", t);
    for (std::size_t i = 0; i < y0.size(); ++i) e_hat[i] = y0[i] - x_hat[i];
    const PosteriorParams<float> p = posterior_params(state, x_hat, e_hat, sched);
    out.degenerate += p.degenerate;
    state = reverse_step_sample(p, rng);
    require_finite(state.x, "state", t - 1);
    if (cfg.record_trajectory) out.trajectory.push_back(state);
  }
  out.x0 = std::move(state.x);
  for (float& v : out.x0.values()) v = std::clamp(v, -1.0f, 1.0f);
  return out;
}

}  // namespace rawshift
