// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 -mfma. Nothing in here may run before the dispatcher
// has confirmed CPU support.

#include "rawshift/simd/kernels.hpp"

#if defined(RAWSHIFT_HAVE_AVX2)

#include <immintrin.h>

#include <array>
#include <vector>

namespace rawshift::simd::avx2 {
namespace {

constexpr std::size_t kLanes = 8;
constexpr std::size_t kCoBlock = 8;

inline float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

// Reorders [cout][cin][taps] into blocks of 8 output channels,
// [block][cin][taps][8], zero-filling the last partial block.
std::vector<float> pack_weights(const ConvGeometry& g, const float* weight) {
  const std::size_t kk = g.taps();
  const std::size_t blocks = (g.cout + kCoBlock - 1) / kCoBlock;
  std::vector<float> packed(blocks * g.cin * kk * kCoBlock, 0.0f);
  for (std::size_t co = 0; co < g.cout; ++co) {
    const std::size_t b = co / kCoBlock, j = co % kCoBlock;
    for (std::size_t ci = 0; ci < g.cin; ++ci)
      for (std::size_t k = 0; k < kk; ++k)
        packed[((b * g.cin + ci) * kk + k) * kCoBlock + j] = weight[(co * g.cin + ci) * kk + k];
  }
  return packed;
}

template <std::size_t K>
void conv_forward_k(const ConvGeometry& g, const float* in, const float* weight, const float* bias, float* out) {
  constexpr std::size_t kk = K * K;
  const std::size_t wp = g.padded_width();
  const std::size_t in_plane = g.in_plane(), out_plane = g.out_plane();
  const std::vector<float> packed = pack_weights(g, weight);
  const std::size_t blocks = (g.cout + kCoBlock - 1) / kCoBlock;

  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t co0 = b * kCoBlock;
    const std::size_t nvalid = std::min(kCoBlock, g.cout - co0);
    const float* wb = packed.data() + b * g.cin * kk * kCoBlock;
    std::array<float, kCoBlock> bias_block{};
    for (std::size_t j = 0; j < nvalid; ++j) bias_block[j] = bias ? bias[co0 + j] : 0.0f;

    for (std::size_t y = 0; y < g.height; ++y) {
      std::size_t x = 0;
      for (; x + kLanes <= g.width; x += kLanes) {
        __m256 acc[kCoBlock];
        for (std::size_t j = 0; j < kCoBlock; ++j) acc[j] = _mm256_set1_ps(bias_block[j]);
        for (std::size_t ci = 0; ci < g.cin; ++ci) {
          const float* src = in + ci * in_plane + y * wp + x;
          const float* wk = wb + ci * kk * kCoBlock;
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx) {
              const __m256 v = _mm256_loadu_ps(src + ky * wp + kx);
              const float* wj = wk + (ky * K + kx) * kCoBlock;
              for (std::size_t j = 0; j < kCoBlock; ++j)
                acc[j] = _mm256_fmadd_ps(_mm256_broadcast_ss(wj + j), v, acc[j]);
            }
        }
        for (std::size_t j = 0; j < nvalid; ++j) _mm256_storeu_ps(out + (co0 + j) * out_plane + y * g.width + x, acc[j]);
      }
      // Column tail.
      for (; x < g.width; ++x) {
        for (std::size_t j = 0; j < nvalid; ++j) {
          float s = bias_block[j];
          for (std::size_t ci = 0; ci < g.cin; ++ci) {
            const float* src = in + ci * in_plane + y * wp + x;
            const float* wk = wb + ci * kk * kCoBlock;
            for (std::size_t ky = 0; ky < K; ++ky)
              for (std::size_t kx = 0; kx < K; ++kx) s += wk[(ky * K + kx) * kCoBlock + j] * src[ky * wp + kx];
          }
          out[(co0 + j) * out_plane + y * g.width + x] = s;
        }
      }
    }
  }
}

template <std::size_t K>
void conv_weight_grad_k(const ConvGeometry& g, const float* in, const float* grad_out, float* grad_weight,
                        float* grad_bias) {
  constexpr std::size_t kk = K * K;
  const std::size_t wp = g.padded_width();
  const std::size_t in_plane = g.in_plane(), out_plane = g.out_plane();
  const std::size_t wfull = g.width - g.width % kLanes;

  for (std::size_t co = 0; co < g.cout; ++co) {
    const float* go = grad_out + co * out_plane;
    if (grad_bias) {
      __m256 acc = _mm256_setzero_ps();
      std::size_t i = 0;
      for (; i + kLanes <= out_plane; i += kLanes) acc = _mm256_add_ps(acc, _mm256_loadu_ps(go + i));
      float s = hsum(acc);
      for (; i < out_plane; ++i) s += go[i];
      grad_bias[co] += s;
    }
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const float* src = in + ci * in_plane;
      __m256 acc[kk];
      for (std::size_t k = 0; k < kk; ++k) acc[k] = _mm256_setzero_ps();
      std::array<float, kk> tail{};
      for (std::size_t y = 0; y < g.height; ++y) {
        const float* grow = go + y * g.width;
        for (std::size_t x = 0; x < wfull; x += kLanes) {
          const __m256 gv = _mm256_loadu_ps(grow + x);
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx)
              acc[ky * K + kx] =
                  _mm256_fmadd_ps(gv, _mm256_loadu_ps(src + (y + ky) * wp + x + kx), acc[ky * K + kx]);
        }
        for (std::size_t x = wfull; x < g.width; ++x)
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx) tail[ky * K + kx] += grow[x] * src[(y + ky) * wp + x + kx];
      }
      float* gw = grad_weight + (co * g.cin + ci) * kk;
      for (std::size_t k = 0; k < kk; ++k) gw[k] += hsum(acc[k]) + tail[k];
    }
  }
}

}  // namespace

void conv_forward(const ConvGeometry& g, const float* in, const float* weight, const float* bias, float* out) {
  switch (g.kernel) {
    case 1: return conv_forward_k<1>(g, in, weight, bias, out);
    case 3: return conv_forward_k<3>(g, in, weight, bias, out);
    default: return conv_forward_ref(g, in, weight, bias, out);
  }
}

void conv_weight_grad(const ConvGeometry& g, const float* in, const float* grad_out, float* grad_weight,
                      float* grad_bias) {
  switch (g.kernel) {
    case 1: return conv_weight_grad_k<1>(g, in, grad_out, grad_weight, grad_bias);
    case 3: return conv_weight_grad_k<3>(g, in, grad_out, grad_weight, grad_bias);
    default: return conv_weight_grad_ref(g, in, grad_out, grad_weight, grad_bias);
  }
}

void squareplus(const float* in, float* out, float* deriv, std::size_t n) {
  const __m256 half = _mm256_set1_ps(0.5f), one = _mm256_set1_ps(1.0f);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 x = _mm256_loadu_ps(in + i);
    const __m256 r = _mm256_sqrt_ps(_mm256_fmadd_ps(x, x, one));
    _mm256_storeu_ps(out + i, _mm256_mul_ps(half, _mm256_add_ps(x, r)));
    if (deriv) _mm256_storeu_ps(deriv + i, _mm256_mul_ps(half, _mm256_add_ps(one, _mm256_div_ps(x, r))));
  }
  if (i < n) squareplus_ref(in + i, out + i, deriv ? deriv + i : nullptr, n - i);
}

void marginal(const float* x0, const float* e0, const float* eps, std::size_t n, MarginalCoeffs<float> c, float* out) {
  const __m256 eta = _mm256_set1_ps(c.eta), scale = _mm256_set1_ps(c.noise_scale), b = _mm256_set1_ps(c.bias);
  const __m256 slope = _mm256_set1_ps((1.0f - c.bias) * 0.5f), one = _mm256_set1_ps(1.0f);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 m = _mm256_fmadd_ps(eta, _mm256_loadu_ps(e0 + i), _mm256_loadu_ps(x0 + i));
    const __m256 w_hat = _mm256_fmadd_ps(slope, _mm256_add_ps(m, one), b);
    _mm256_storeu_ps(out + i, _mm256_fmadd_ps(_mm256_mul_ps(scale, w_hat), _mm256_loadu_ps(eps + i), m));
  }
  if (i < n) marginal_ref(x0 + i, e0 + i, eps + i, n - i, c, out + i);
}

std::size_t posterior(const float* xt, const float* x0, const float* e0, std::size_t n, PosteriorCoeffs<float> c,
                      float* mu, float* sigma2, float* gamma) {
  const __m256 eta = _mm256_set1_ps(c.eta), eta_prev = _mm256_set1_ps(c.eta_prev);
  const __m256 alpha = _mm256_set1_ps(c.alpha), kappa2 = _mm256_set1_ps(c.kappa2);
  const __m256 b = _mm256_set1_ps(c.bias), slope = _mm256_set1_ps((1.0f - c.bias) * 0.5f);
  const __m256 one = _mm256_set1_ps(1.0f), zero = _mm256_setzero_ps();
  std::size_t degenerate = 0;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256 vx0 = _mm256_loadu_ps(x0 + i), ve0 = _mm256_loadu_ps(e0 + i);
    const __m256 wt = _mm256_fmadd_ps(eta, ve0, vx0);
    const __m256 wp = _mm256_fmadd_ps(eta_prev, ve0, vx0);
    const __m256 ht = _mm256_fmadd_ps(slope, _mm256_add_ps(wt, one), b);
    const __m256 hp = _mm256_fmadd_ps(slope, _mm256_add_ps(wp, one), b);
    const __m256 num = _mm256_mul_ps(eta_prev, _mm256_mul_ps(hp, hp));
    const __m256 den = _mm256_mul_ps(eta, _mm256_mul_ps(ht, ht));
    const __m256 d = _mm256_sub_ps(den, num);
    const __m256 ok = _mm256_cmp_ps(d, zero, _CMP_GT_OQ);
    degenerate += kLanes - static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_ps(ok)));
    const __m256 g = _mm256_blendv_ps(one, _mm256_div_ps(num, den), ok);
    const __m256 s2 = _mm256_and_ps(ok, _mm256_mul_ps(kappa2, _mm256_mul_ps(g, d)));
    const __m256 noisy = _mm256_fnmadd_ps(alpha, ve0, _mm256_loadu_ps(xt + i));
    const __m256 clean = wp;
    _mm256_storeu_ps(mu + i, _mm256_fmadd_ps(g, noisy, _mm256_mul_ps(_mm256_sub_ps(one, g), clean)));
    _mm256_storeu_ps(sigma2 + i, s2);
    _mm256_storeu_ps(gamma + i, g);
  }
  if (i < n) degenerate += posterior_ref(xt + i, x0 + i, e0 + i, n - i, c, mu + i, sigma2 + i, gamma + i);
  return degenerate;
}

}  // namespace rawshift::simd::avx2

#endif  // RAWSHIFT_HAVE_AVX2
