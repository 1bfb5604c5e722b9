// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "rawshift/image.hpp"
#include "rawshift/manifest.hpp"

namespace rawshift {

inline constexpr double kSaturationThreshold = 0.98;

/// Residual statistics of one packed channel over RGB-intensity bins that
/// partition [0, 1].
struct ResidualCurve {
  std::size_t channel = 0;
  std::vector<double> bin_center;
  std::vector<double> mean_abs;
  std::vector<double> mean;  // signed
  std::vector<double> stddev;
  std::vector<std::size_t> count;
};

/// Streaming per-bin sums; merge() is associative so images can be
/// accumulated in any order or in parallel.
class ResidualAccumulator {
 public:
  explicit ResidualAccumulator(std::size_t bins);

  std::size_t bins() const noexcept { return bins_; }
  /// residual = y01 - x01 per packed element, binned by y01.
  void add(const Tensor<float>& y0_packed, const Tensor<float>& x0);
  void merge(const ResidualAccumulator& other);
  std::vector<ResidualCurve> curves() const;

 private:
  struct Cell {
    std::size_t n = 0;
    double sum = 0, sum_abs = 0, sum_sq = 0;
  };
  std::size_t bins_;
  std::vector<Cell> cells_;  // [channel][bin]
};

using CameraCurves = std::map<CameraLabel, std::vector<ResidualCurve>>;

/// Per-camera residual curves over a paired corpus; bins >= 8.
CameraCurves residual_stats(const Manifest& manifest, std::size_t bins, std::size_t workers = 1);

/// CSV with header `channel,bin_center,mean_abs_residual,std_residual,count`.
void write_residual_csv(std::ostream& out, const std::vector<ResidualCurve>& curves);
void write_residual_csv(const std::filesystem::path& path, const std::vector<ResidualCurve>& curves);

/// Fraction of full-resolution RGB samples at or above the threshold (on [0, 1]).
double saturation_fraction(const RgbImage& rgb, double threshold = kSaturationThreshold);

struct RankedEntry {
  ManifestEntry entry;
  double saturation = 0.0;
};

/// Top ceil(fraction * n) entries by saturation fraction, descending; ties
/// keep the order of rgb_path, then manifest order.
std::vector<RankedEntry> rank_overexposed(const Manifest& manifest, double fraction, std::size_t workers = 1);
Manifest select_overexposed(const Manifest& manifest, double fraction, std::size_t workers = 1);

}  // namespace rawshift
