// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "rawshift/tensor.hpp"

namespace rawshift {

struct ScheduleConfig {
  int steps = 4;
  double kappa = 2.0;
  double bias = 0.1;
  double eta_first = 0.001;  // eta_1
  double eta_last = 0.999;   // eta_T
};

/// Shifting sequence eta_0..eta_T with eta_0 = 0, strictly increasing,
/// eta_T in [0.999, 1]; noise scale kappa > 0; weight bias b in (0, 1].
/// b = 1 pins the noise weight to 1 everywhere (plain residual shifting).
class Schedule {
 public:
  /// Validates every invariant; throws std::invalid_argument otherwise.
  Schedule(std::vector<double> eta, double kappa, double bias);

  int steps() const noexcept { return static_cast<int>(eta_.size()) - 1; }
  double eta(int t) const { return eta_.at(static_cast<std::size_t>(t)); }
  /// eta_t - eta_{t-1}, for 1 <= t <= T.
  double alpha(int t) const;
  double kappa() const noexcept { return kappa_; }
  double bias() const noexcept { return bias_; }
  std::span<const double> etas() const noexcept { return eta_; }

  Schedule with_bias(double bias) const { return Schedule(eta_, kappa_, bias); }
  Schedule with_kappa(double kappa) const { return Schedule(eta_, kappa, bias_); }

  nlohmann::json to_json() const;
  static Schedule from_json(const nlohmann::json& j);

 private:
  std::vector<double> eta_;
  double kappa_;
  double bias_;
};

/// Geometric schedule eta_t = eta_1 * (eta_T / eta_1)^((t-1)/(T-1)), eta_0 = 0.
/// For T = 1 the single step uses eta_T.
Schedule make_schedule(const ScheduleConfig& cfg);
Schedule make_schedule(int steps, double kappa = 2.0, double bias = 0.1);

/// b + (1 - b) * (w + 1) / 2: maps w in [-1, 1] to [b, 1].
template <typename T>
constexpr T biased_weight(T w, T bias) {
  return bias + (T(1) - bias) * ((w + T(1)) * T(0.5));
}

template <typename T>
struct WeightMap {
  Tensor<T> w;      // x0 + eta_t e0
  Tensor<T> w_hat;  // biased_weight(w)
  int t = 0;
};

template <typename T>
WeightMap<T> weight_map(const Tensor<T>& x0, const Tensor<T>& e0, const Schedule& sched, int t);

}  // namespace rawshift
