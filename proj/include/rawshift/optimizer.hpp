// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

namespace rawshift {

enum class OptimizerKind { momentum, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr_max = 2e-3;
  double lr_min = 2e-4;
  std::size_t total_steps = 1;  // length of the cosine cycle
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// lr_min + (lr_max - lr_min) (1 + cos(pi * step / total)) / 2, held at
/// lr_min past the end of the cycle.
double cosine_lr(const OptimizerConfig& cfg, std::size_t step);

/// First-order optimizer over named parameter groups. State is created
/// lazily per group, so groups that never receive an update stay untouched.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

  const OptimizerConfig& config() const noexcept { return cfg_; }

  /// One update of `params` from `grad` at learning rate `lr`; `step` is the
  /// 1-based global step used for Adam bias correction.
  void update(const std::string& group, std::span<T> params, std::span<const T> grad, double lr, std::size_t step);

 private:
  struct State {
    std::vector<double> m;
    std::vector<double> v;
  };
  OptimizerConfig cfg_;
  std::map<std::string, State> state_;
};

}  // namespace rawshift
