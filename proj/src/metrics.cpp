// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/metrics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rawshift/image.hpp"

namespace rawshift {
namespace {

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> w{};
  double s = 0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - (kSsimWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

// Valid-mode separable filter of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& in, std::size_t h, std::size_t w,
                                 const std::array<double, kSsimWindow>& taps) {
  const std::size_t oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) s += taps[k] * in[y * w + x + k];
      rows[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) s += taps[k] * rows[(y + k) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double data_range) {
  require_same_shape(a, b, "psnr");
  if (!(data_range > 0)) throw std::invalid_argument("psnr: data_range must be positive");
  double se = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / (se / static_cast<double>(a.size())));
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, double data_range) {
  require_same_shape(a, b, "ssim");
  if (a.rank() != 3) throw std::invalid_argument("ssim: expected [C, H, W]");
  const std::size_t h = a.height(), w = a.width(), n = h * w;
  if (h < kSsimWindow || w < kSsimWindow) throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  const double c1 = (kSsimK1 * data_range) * (kSsimK1 * data_range);
  const double c2 = (kSsimK2 * data_range) * (kSsimK2 * data_range);
  const auto taps = gaussian_taps();
  double total = 0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    std::vector<double> pa(n), pb(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = a.plane(c)[i];
      pb[i] = b.plane(c)[i];
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto ma = filter_valid(pa, h, w, taps), mb = filter_valid(pb, h, w, taps);
    const auto saa = filter_valid(aa, h, w, taps), sbb = filter_valid(bb, h, w, taps),
               sab = filter_valid(ab, h, w, taps);
    double acc = 0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cov = sab[i] - ma[i] * mb[i];
      acc += ((2 * ma[i] * mb[i] + c1) * (2 * cov + c2)) / ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(ma.size());
  }
  return total / static_cast<double>(a.channels());
}

QualityScore raw_quality(const Tensor<float>& prediction, const Tensor<float>& truth) {
  const Tensor<double> p = to_unit_range(prediction.cast<double>()), t = to_unit_range(truth.cast<double>());
  QualityScore q;
  q.psnr = psnr(p, t, 1.0);
  q.ssim = (p.height() >= kSsimWindow && p.width() >= kSsimWindow) ? ssim(p, t, 1.0)
                                                                     : std::numeric_limits<double>::quiet_NaN();
  return q;
}

template double psnr(const Tensor<float>&, const Tensor<float>&, double);
template double psnr(const Tensor<double>&, const Tensor<double>&, double);
template double ssim(const Tensor<float>&, const Tensor<float>&, double);
template double ssim(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace rawshift
