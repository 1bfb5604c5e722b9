// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>

namespace rawshift {

/// Offset inside the log-L1 term. Logs are taken on the [0, 1] remap
/// (v + 1) / 2 of the [-1, 1] tensors.
inline constexpr double kLogL1Epsilon = 1e-4;

struct LossBreakdown {
  double mse = 0.0;
  double l1 = 0.0;
  double log_l1 = 0.0;
  double total = 0.0;
  double epsilon = kLogL1Epsilon;

  LossBreakdown& operator+=(const LossBreakdown& o) {
    mse += o.mse;
    l1 += o.l1;
    log_l1 += o.log_l1;
    total += o.total;
    return *this;
  }
};

/// mean (p - x)^2 + mean |p - x| + mean |log((p+1)/2 + eps) - log((x+1)/2 + eps)|.
///
/// `normalizer` is the element count the means are taken over; pass the
/// whole batch size to evaluate one image of a batch. When `grad` is
/// non-empty, dL/dp is written (not accumulated) into it. Throws
/// std::domain_error naming the element when a log argument is not positive.
template <typename T>
LossBreakdown combined_loss(std::span<const T> prediction, std::span<const T> target, double epsilon = kLogL1Epsilon,
                            std::span<T> grad = {}, double normalizer = 0.0);

}  // namespace rawshift
