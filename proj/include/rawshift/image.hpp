// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rawshift/tensor.hpp"
#include "rawshift/types.hpp"

namespace rawshift {

// Bayer phase is RGGB. Packed channel order is (R, G1, G2, B):
//   0 <- (even row, even col)   1 <- (even, odd)
//   2 <- (odd, even)            3 <- (odd, odd)
inline constexpr std::size_t kPackedChannels = 4;
inline constexpr std::size_t kRgbChannels = 3;

/// Packed, black/white-level-normalized sensor image in [-1, 1], shape [4, H, W].
class RawImage {
 public:
  RawImage(Tensor<float> data, double black_level, double white_level, CameraLabel camera = {});

  const Tensor<float>& data() const noexcept { return data_; }
  double black_level() const noexcept { return black_; }
  double white_level() const noexcept { return white_; }
  CameraLabel camera() const noexcept { return camera_; }
  std::size_t height() const { return data_.height(); }
  std::size_t width() const { return data_.width(); }

 private:
  Tensor<float> data_;
  double black_;
  double white_;
  CameraLabel camera_;
};

/// Full-resolution rendered image in [-1, 1], shape [3, 2H, 2W].
class RgbImage {
 public:
  explicit RgbImage(Tensor<float> data);

  /// Builds from display values in [0, 1] (mapped affinely to [-1, 1]).
  static RgbImage from_unit(const Tensor<float>& rgb01);

  const Tensor<float>& data() const noexcept { return data_; }
  std::size_t packed_height() const { return data_.height() / 2; }
  std::size_t packed_width() const { return data_.width() / 2; }

 private:
  Tensor<float> data_;
};

/// RGB sampled at the Bayer site of each packed RAW channel, shape [4, H, W].
struct PackedRgb {
  Tensor<float> data;
};

/// packed_rgb - raw, elementwise.
struct Residual {
  Tensor<float> data;
};

/// 2 * (clamp(v, black, white) - black) / (white - black) - 1, elementwise.
/// Rejects white <= black and non-finite input.
RawImage normalize_raw(const Tensor<float>& sensor, double black_level, double white_level,
                       CameraLabel camera = {});

/// Inverse of normalize_raw on [black, white].
Tensor<float> denormalize_raw(const RawImage& raw);
Tensor<float> denormalize_raw(const Tensor<float>& normalized, double black_level, double white_level);

/// [1, 2H, 2W] mosaic -> [4, H, W]; odd dimensions are rejected.
template <typename T>
Tensor<T> pack_bayer(const Tensor<T>& mosaic);

/// [4, H, W] -> [1, 2H, 2W]; exact inverse of pack_bayer.
template <typename T>
Tensor<T> unpack_bayer(const Tensor<T>& packed);

/// RGB [3, 2H, 2W] -> [4, H, W] by sampling each RGB channel at its Bayer site.
template <typename T>
Tensor<T> align_rgb(const Tensor<T>& rgb);

PackedRgb align_rgb(const RgbImage& rgb);

Residual residual(const PackedRgb& y0, const RawImage& x0);

/// [3, 2H, 2W] -> [12, H, W]; channel 4*c + 2*dy + dx holds rgb[c](2i+dy, 2j+dx).
template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& rgb);

/// v -> (v + 1) / 2 and back.
template <typename T>
Tensor<T> to_unit_range(const Tensor<T>& signed_values);
template <typename T>
Tensor<T> to_signed_range(const Tensor<T>& unit_values);

}  // namespace rawshift
