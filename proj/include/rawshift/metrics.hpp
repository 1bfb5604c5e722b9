// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>

#include "rawshift/tensor.hpp"

namespace rawshift {

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// 10 log10(range^2 / mse); +infinity for identical inputs.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double data_range);

/// Mean local SSIM over "valid" 11x11 Gaussian windows, averaged over
/// channels. Inputs are [C, H, W] with H, W >= 11.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double data_range = 1.0);

struct QualityScore {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Scores two packed RAW tensors in [-1, 1] after remapping them to [0, 1].
QualityScore raw_quality(const Tensor<float>& prediction, const Tensor<float>& truth);

}  // namespace rawshift
