// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "rawshift/simd/kernels.hpp"

namespace rawshift {
namespace {

void require_step(const Schedule& sched, int t, const char* what) {
  if (t < 1 || t > sched.steps())
    throw std::out_of_range(std::string(what) + ": timestep " + std::to_string(t) + " outside [1, T]");
}

template <typename T>
simd::PosteriorCoeffs<T> posterior_coeffs(const Schedule& sched, int t) {
  return {static_cast<T>(sched.eta(t)), static_cast<T>(sched.eta(t - 1)), static_cast<T>(sched.alpha(t)),
          static_cast<T>(sched.kappa() * sched.kappa()), static_cast<T>(sched.bias())};
}

}  // namespace

template <typename T>
Tensor<T> forward_marginal_from_noise(const Tensor<T>& x0, const Tensor<T>& e0, const Schedule& sched, int t,
                                      const Tensor<T>& eps) {
  require_step(sched, t, "forward_marginal");
  require_same_shape(x0, e0, "forward_marginal");
  require_same_shape(x0, eps, "forward_marginal");
  const simd::MarginalCoeffs<T> c{static_cast<T>(sched.eta(t)),
                                  static_cast<T>(sched.kappa() * std::sqrt(sched.eta(t))),
                                  static_cast<T>(sched.bias())};
  Tensor<T> out(x0.shape());
  simd::marginal(x0.data(), e0.data(), eps.data(), x0.size(), c, out.data());
  return out;
}

template <typename T>
NoisyState<T> forward_marginal_sample(const Tensor<T>& x0, const Tensor<T>& e0, const Schedule& sched, int t,
                                      Rng& rng) {
  Tensor<T> eps(x0.shape());
  rng.fill_normal(eps.values());
  return {forward_marginal_from_noise(x0, e0, sched, t, eps), t};
}

template <typename T>
StepSample<T> forward_step_sample(const NoisyState<T>& prev, const Tensor<T>& x0, const Tensor<T>& e0,
                                  const Schedule& sched, Rng& rng) {
  const int t = prev.t + 1;
  require_step(sched, t, "forward_step");
  require_same_shape(x0, e0, "forward_step");
  require_same_shape(x0, prev.x, "forward_step");
  const T eta = static_cast<T>(sched.eta(t)), eta_prev = static_cast<T>(sched.eta(t - 1));
  const T alpha = static_cast<T>(sched.alpha(t)), kappa = static_cast<T>(sched.kappa());
  const T b = static_cast<T>(sched.bias());

  StepSample<T> out{{Tensor<T>(x0.shape()), t}, 0};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const T ht = biased_weight(x0[i] + eta * e0[i], b);
    const T hp = biased_weight(x0[i] + eta_prev * e0[i], b);
    T var = eta * ht * ht - eta_prev * hp * hp;
    if (var < T(0)) {
      var = T(0);
      ++out.clamped;
    }
    out.state.x[i] = prev.x[i] + alpha * e0[i] + kappa * std::sqrt(var) * static_cast<T>(rng.normal());
  }
  return out;
}

template <typename T>
PosteriorParams<T> posterior_params(const NoisyState<T>& xt, const Tensor<T>& x0_hat, const Tensor<T>& e0_hat,
                                    const Schedule& sched) {
  require_step(sched, xt.t, "posterior_params");
  require_same_shape(xt.x, x0_hat, "posterior_params");
  require_same_shape(xt.x, e0_hat, "posterior_params");
  PosteriorParams<T> p{Tensor<T>(xt.x.shape()), Tensor<T>(xt.x.shape()), Tensor<T>(xt.x.shape()), xt.t, 0};
  p.degenerate = simd::posterior(xt.x.data(), x0_hat.data(), e0_hat.data(), xt.x.size(), posterior_coeffs<T>(sched, xt.t),
                                 p.mu.data(), p.sigma2.data(), p.gamma.data());
  return p;
}

template <typename T>
NoisyState<T> reverse_step_sample(const PosteriorParams<T>& params, Rng& rng) {
  NoisyState<T> out{Tensor<T>(params.mu.shape()), params.t - 1};
  for (std::size_t i = 0; i < params.mu.size(); ++i) {
    const T s2 = params.sigma2[i];
    // A zero variance must reproduce mu exactly, so skip the draw.
    out.x[i] = s2 > T(0) ? params.mu[i] + std::sqrt(s2) * static_cast<T>(rng.normal()) : params.mu[i];
  }
  return out;
}

ScalarPosterior posterior_scalar(double xt, double x0, double e0, const Schedule& sched, int t) {
  require_step(sched, t, "posterior_scalar");
  double mu, s2, g;
  const auto deg = simd::posterior_ref(&xt, &x0, &e0, 1, posterior_coeffs<double>(sched, t), &mu, &s2, &g);
  return {mu, s2, g, deg != 0};
}

#define RAWSHIFT_INSTANTIATE(T)                                                                                   \
  template Tensor<T> forward_marginal_from_noise<T>(const Tensor<T>&, const Tensor<T>&, const Schedule&, int,    \
                                                    const Tensor<T>&);                                            \
  template NoisyState<T> forward_marginal_sample<T>(const Tensor<T>&, const Tensor<T>&, const Schedule&, int,    \
                                                    Rng&);                                                        \
  template StepSample<T> forward_step_sample<T>(const NoisyState<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                                const Schedule&, Rng&);                                           \
  template PosteriorParams<T> posterior_params<T>(const NoisyState<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                                  const Schedule&);                                               \
  template NoisyState<T> reverse_step_sample<T>(const PosteriorParams<T>&, Rng&);

RAWSHIFT_INSTANTIATE(float)
RAWSHIFT_INSTANTIATE(double)
#undef RAWSHIFT_INSTANTIATE

}  // namespace rawshift
