// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rawshift {

double cosine_lr(const OptimizerConfig& cfg, std::size_t step) {
  const double total = static_cast<double>(std::max<std::size_t>(cfg.total_steps, 1));
  const double frac = std::min(static_cast<double>(step), total) / total;
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

template <typename T>
void Optimizer<T>::update(const std::string& group, std::span<T> params, std::span<const T> grad, double lr,
                          std::size_t step) {
  if (params.size() != grad.size()) throw std::invalid_argument("optimizer: gradient size mismatch for " + group);
  State& s = state_[group];
  if (s.m.size() != params.size()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  if (cfg_.kind == OptimizerKind::momentum) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      s.m[i] = cfg_.momentum * s.m[i] + static_cast<double>(grad[i]);
      params[i] = static_cast<T>(params[i] - lr * s.m[i]);
    }
    return;
  }
  const double n = static_cast<double>(std::max<std::size_t>(step, 1));
  const double c1 = 1.0 - std::pow(cfg_.beta1, n), c2 = 1.0 - std::pow(cfg_.beta2, n);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
    s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
    const double upd = (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + cfg_.adam_eps);
    params[i] = static_cast<T>(params[i] - lr * upd);
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace rawshift
