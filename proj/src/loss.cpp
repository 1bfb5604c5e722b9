// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rawshift {
namespace {

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

template <typename T>
LossBreakdown combined_loss(std::span<const T> prediction, std::span<const T> target, double epsilon,
                            std::span<T> grad, double normalizer) {
  if (prediction.size() != target.size()) throw std::invalid_argument("combined_loss: size mismatch");
  if (!grad.empty() && grad.size() != prediction.size()) throw std::invalid_argument("combined_loss: grad size mismatch");
  if (prediction.empty()) throw std::invalid_argument("combined_loss: empty input");
  const double n = normalizer > 0.0 ? normalizer : static_cast<double>(prediction.size());

  double se = 0.0, ae = 0.0, le = 0.0;
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double p = prediction[i], x = target[i];
    const double u = 0.5 * (p + 1.0) + epsilon, v = 0.5 * (x + 1.0) + epsilon;
    if (!(u > 0.0) || !(v > 0.0))
      throw std::domain_error("combined_loss: non-positive log argument at element " + std::to_string(i) +
                              " (prediction " + std::to_string(p) + ", target " + std::to_string(x) + ")");
    const double diff = p - x;
    const double ldiff = std::log(u) - std::log(v);
    se += diff * diff;
    ae += std::abs(diff);
    le += std::abs(ldiff);
    if (!grad.empty()) grad[i] = static_cast<T>((2.0 * diff + sign(diff) + sign(ldiff) * 0.5 / u) / n);
  }
  LossBreakdown out;
  out.epsilon = epsilon;
  out.mse = se / n;
  out.l1 = ae / n;
  out.log_l1 = le / n;
  out.total = out.mse + out.l1 + out.log_l1;
  return out;
}

template LossBreakdown combined_loss<float>(std::span<const float>, std::span<const float>, double, std::span<float>,
                                            double);
template LossBreakdown combined_loss<double>(std::span<const double>, std::span<const double>, double,
                                             std::span<double>, double);

}  // namespace rawshift
