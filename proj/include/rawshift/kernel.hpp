// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Signal-dependent residual-shifting diffusion: forward transition and
// marginal sampling, and the closed-form reverse posterior. All noise
// magnitudes use the biased weight w_hat = b + (1-b)(w+1)/2 of the
// noise-free intermediate state w_t = x0 + eta_t e0; with b = 1 every
// formula reduces to plain residual shifting.

#pragma once

#include <cstddef>

#include "rawshift/rng.hpp"
#include "rawshift/schedule.hpp"
#include "rawshift/tensor.hpp"

namespace rawshift {

template <typename T>
struct NoisyState {
  Tensor<T> x;
  int t = 0;
};

template <typename T>
struct PosteriorParams {
  Tensor<T> mu;
  Tensor<T> sigma2;
  Tensor<T> gamma;
  int t = 0;                   // the step being reversed (t -> t-1)
  std::size_t degenerate = 0;  // elements with non-positive forward step variance
};

template <typename T>
struct StepSample {
  NoisyState<T> state;
  std::size_t clamped = 0;  // elements whose step variance was clamped at 0
};

/// x_t = x0 + eta_t e0 + kappa sqrt(eta_t) w_hat_t * eps for a given eps.
/// This is the exact batch former used in training.
template <typename T>
Tensor<T> forward_marginal_from_noise(const Tensor<T>& x0, const Tensor<T>& e0, const Schedule& sched, int t,
                                      const Tensor<T>& eps);

/// Samples q(x_t | x0, y0); requires 1 <= t <= T.
template <typename T>
NoisyState<T> forward_marginal_sample(const Tensor<T>& x0, const Tensor<T>& e0, const Schedule& sched, int t,
                                      Rng& rng);

/// Samples q(x_t | x_{t-1}, x0, y0) with t = prev.t + 1. The step variance
/// kappa^2 (eta_t w_hat_t^2 - eta_{t-1} w_hat_{t-1}^2) is clamped at 0 where
/// negative; the number of clamped elements is reported.
template <typename T>
StepSample<T> forward_step_sample(const NoisyState<T>& prev, const Tensor<T>& x0, const Tensor<T>& e0,
                                  const Schedule& sched, Rng& rng);

/// Moments of q(x_{t-1} | x_t, x0, y0) from x_t and the (estimated) x0, e0.
template <typename T>
PosteriorParams<T> posterior_params(const NoisyState<T>& xt, const Tensor<T>& x0_hat, const Tensor<T>& e0_hat,
                                    const Schedule& sched);

/// x_{t-1} = mu + sqrt(sigma2) * eps.
template <typename T>
NoisyState<T> reverse_step_sample(const PosteriorParams<T>& params, Rng& rng);

/// Scalar posterior moments in double precision (single pixel).
struct ScalarPosterior {
  double mu;
  double sigma2;
  double gamma;
  bool degenerate;
};
ScalarPosterior posterior_scalar(double xt, double x0, double e0, const Schedule& sched, int t);

}  // namespace rawshift
