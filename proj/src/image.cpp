// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/image.hpp"

#include <algorithm>
#include <cmath>

namespace rawshift {
namespace {

void require_planar(const Tensor<float>& t, std::size_t channels, const char* what) {
  if (t.rank() != 3 || t.channels() != channels)
    throw std::invalid_argument(std::string(what) + ": expected [" + std::to_string(channels) +
                                ",H,W], got " + shape_string(t.shape()));
}

void require_even(std::size_t h, std::size_t w, const char* what) {
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument(std::string(what) + ": spatial dimensions must be even");
}

void require_signed_range(const Tensor<float>& t, const char* what) {
  for (float v : t.values())
    if (!(v >= -1.0f && v <= 1.0f))
      throw std::invalid_argument(std::string(what) + ": values must lie in [-1, 1]");
}

}  // namespace

RawImage::RawImage(Tensor<float> data, double black_level, double white_level, CameraLabel camera)
    : data_(std::move(data)), black_(black_level), white_(white_level), camera_(camera) {
  require_planar(data_, kPackedChannels, "RawImage");
  if (!(white_ > black_)) throw std::invalid_argument("RawImage: white level must exceed black level");
  require_signed_range(data_, "RawImage");
}

RgbImage::RgbImage(Tensor<float> data) : data_(std::move(data)) {
  require_planar(data_, kRgbChannels, "RgbImage");
  require_even(data_.height(), data_.width(), "RgbImage");
  require_signed_range(data_, "RgbImage");
}

RgbImage RgbImage::from_unit(const Tensor<float>& rgb01) { return RgbImage(to_signed_range(rgb01)); }

RawImage normalize_raw(const Tensor<float>& sensor, double black_level, double white_level,
                       CameraLabel camera) {
  if (!(white_level > black_level)) throw std::invalid_argument("normalize_raw: white level must exceed black level");
  if (!std::isfinite(black_level) || !std::isfinite(white_level))
    throw std::invalid_argument("normalize_raw: levels must be finite");
  require_planar(sensor, kPackedChannels, "normalize_raw");
  const double range = white_level - black_level;
  Tensor<float> out(sensor.shape());
  for (std::size_t i = 0; i < sensor.size(); ++i) {
    const double v = sensor[i];
    if (!std::isfinite(v)) throw std::invalid_argument("normalize_raw: non-finite sensor value");
    const double c = std::clamp(v, black_level, white_level);
    out[i] = static_cast<float>(std::clamp(2.0 * (c - black_level) / range - 1.0, -1.0, 1.0));
  }
  return RawImage(std::move(out), black_level, white_level, camera);
}

Tensor<float> denormalize_raw(const Tensor<float>& normalized, double black_level, double white_level) {
  const double range = white_level - black_level;
  Tensor<float> out(normalized.shape());
  for (std::size_t i = 0; i < normalized.size(); ++i)
    out[i] = static_cast<float>(black_level + (static_cast<double>(normalized[i]) + 1.0) * 0.5 * range);
  return out;
}

Tensor<float> denormalize_raw(const RawImage& raw) {
  return denormalize_raw(raw.data(), raw.black_level(), raw.white_level());
}

template <typename T>
Tensor<T> pack_bayer(const Tensor<T>& mosaic) {
  if (mosaic.rank() != 3 || mosaic.channels() != 1)
    throw std::invalid_argument("pack_bayer: expected [1,2H,2W], got " + shape_string(mosaic.shape()));
  require_even(mosaic.height(), mosaic.width(), "pack_bayer");
  const std::size_t h = mosaic.height() / 2, w = mosaic.width() / 2;
  Tensor<T> out({kPackedChannels, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      out.at(0, y, x) = mosaic.at(0, 2 * y, 2 * x);
      out.at(1, y, x) = mosaic.at(0, 2 * y, 2 * x + 1);
      out.at(2, y, x) = mosaic.at(0, 2 * y + 1, 2 * x);
      out.at(3, y, x) = mosaic.at(0, 2 * y + 1, 2 * x + 1);
    }
  return out;
}

template <typename T>
Tensor<T> unpack_bayer(const Tensor<T>& packed) {
  if (packed.rank() != 3 || packed.channels() != kPackedChannels)
    throw std::invalid_argument("unpack_bayer: expected [4,H,W], got " + shape_string(packed.shape()));
  const std::size_t h = packed.height(), w = packed.width();
  Tensor<T> out({1, 2 * h, 2 * w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      out.at(0, 2 * y, 2 * x) = packed.at(0, y, x);
      out.at(0, 2 * y, 2 * x + 1) = packed.at(1, y, x);
      out.at(0, 2 * y + 1, 2 * x) = packed.at(2, y, x);
      out.at(0, 2 * y + 1, 2 * x + 1) = packed.at(3, y, x);
    }
  return out;
}

template <typename T>
Tensor<T> align_rgb(const Tensor<T>& rgb) {
  if (rgb.rank() != 3 || rgb.channels() != kRgbChannels)
    throw std::invalid_argument("align_rgb: expected [3,2H,2W], got " + shape_string(rgb.shape()));
  require_even(rgb.height(), rgb.width(), "align_rgb");
  const std::size_t h = rgb.height() / 2, w = rgb.width() / 2;
  Tensor<T> out({kPackedChannels, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      out.at(0, y, x) = rgb.at(0, 2 * y, 2 * x);
      out.at(1, y, x) = rgb.at(1, 2 * y, 2 * x + 1);
      out.at(2, y, x) = rgb.at(1, 2 * y + 1, 2 * x);
      out.at(3, y, x) = rgb.at(2, 2 * y + 1, 2 * x + 1);
    }
  return out;
}

PackedRgb align_rgb(const RgbImage& rgb) { return PackedRgb{align_rgb(rgb.data())}; }

Residual residual(const PackedRgb& y0, const RawImage& x0) {
  require_same_shape(y0.data, x0.data(), "residual");
  Tensor<float> e(x0.data().shape());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = y0.data[i] - x0.data()[i];
  return Residual{std::move(e)};
}

template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& rgb) {
  if (rgb.rank() != 3 || rgb.channels() != kRgbChannels)
    throw std::invalid_argument("space_to_depth: expected [3,2H,2W], got " + shape_string(rgb.shape()));
  require_even(rgb.height(), rgb.width(), "space_to_depth");
  const std::size_t h = rgb.height() / 2, w = rgb.width() / 2;
  Tensor<T> out({4 * kRgbChannels, h, w});
  for (std::size_t c = 0; c < kRgbChannels; ++c)
    for (std::size_t dy = 0; dy < 2; ++dy)
      for (std::size_t dx = 0; dx < 2; ++dx) {
        const std::size_t oc = 4 * c + 2 * dy + dx;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x) out.at(oc, y, x) = rgb.at(c, 2 * y + dy, 2 * x + dx);
      }
  return out;
}

template <typename T>
Tensor<T> to_unit_range(const Tensor<T>& signed_values) {
  Tensor<T> out(signed_values.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (signed_values[i] + T(1)) / T(2);
  return out;
}

template <typename T>
Tensor<T> to_signed_range(const Tensor<T>& unit_values) {
  Tensor<T> out(unit_values.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(2) * unit_values[i] - T(1);
  return out;
}

#define RAWSHIFT_INSTANTIATE(T)                                \
  template Tensor<T> pack_bayer<T>(const Tensor<T>&);          \
  template Tensor<T> unpack_bayer<T>(const Tensor<T>&);        \
  template Tensor<T> align_rgb<T>(const Tensor<T>&);           \
  template Tensor<T> space_to_depth<T>(const Tensor<T>&);      \
  template Tensor<T> to_unit_range<T>(const Tensor<T>&);       \
  template Tensor<T> to_signed_range<T>(const Tensor<T>&);

RAWSHIFT_INSTANTIATE(float)
RAWSHIFT_INSTANTIATE(double)
#undef RAWSHIFT_INSTANTIATE

}  // namespace rawshift
