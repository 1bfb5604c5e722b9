// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Data-parallel inner loops. Every kernel has a portable scalar reference
// (templated, used for double precision and as the ground truth in the
// equivalence tests) and, for float, an AVX2/FMA variant selected at
// runtime. Results of the two variants agree to rounding, not bit-exactly,
// because the vector path contracts multiply-adds.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace rawshift::simd {

/// Stride-1 "same" convolution. The input is pre-padded by (kernel-1)/2 on
/// every side, so its planes are (height+kernel-1) x (width+kernel-1).
/// Weights are [cout][cin][kernel][kernel].
struct ConvGeometry {
  std::size_t cin = 0;
  std::size_t cout = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t kernel = 1;

  std::size_t padded_width() const { return width + kernel - 1; }
  std::size_t padded_height() const { return height + kernel - 1; }
  std::size_t in_plane() const { return padded_width() * padded_height(); }
  std::size_t out_plane() const { return width * height; }
  std::size_t taps() const { return kernel * kernel; }
};

template <typename T>
struct MarginalCoeffs {
  T eta;          // eta_t
  T noise_scale;  // kappa * sqrt(eta_t)
  T bias;         // b
};

template <typename T>
struct PosteriorCoeffs {
  T eta;       // eta_t
  T eta_prev;  // eta_{t-1}
  T alpha;     // eta_t - eta_{t-1}
  T kappa2;    // kappa^2
  T bias;      // b
};

// ---------------------------------------------------------------------------
// Scalar references

template <typename T>
void conv_forward_ref(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  const std::size_t wp = g.padded_width(), k = g.kernel, kk = g.taps();
  for (std::size_t co = 0; co < g.cout; ++co) {
    T* dst = out + co * g.out_plane();
    const T b = bias ? bias[co] : T(0);
    std::fill(dst, dst + g.out_plane(), b);
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const T* src = in + ci * g.in_plane();
      const T* w = weight + (co * g.cin + ci) * kk;
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx) {
          const T wv = w[ky * k + kx];
          for (std::size_t y = 0; y < g.height; ++y) {
            const T* s = src + (y + ky) * wp + kx;
            T* d = dst + y * g.width;
            for (std::size_t x = 0; x < g.width; ++x) d[x] += wv * s[x];
          }
        }
    }
  }
}

/// Accumulates (+=) the weight and bias gradients of conv_forward_ref.
template <typename T>
void conv_weight_grad_ref(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight, T* grad_bias) {
  const std::size_t wp = g.padded_width(), k = g.kernel, kk = g.taps();
  for (std::size_t co = 0; co < g.cout; ++co) {
    const T* go = grad_out + co * g.out_plane();
    if (grad_bias) {
      T s = 0;
      for (std::size_t i = 0; i < g.out_plane(); ++i) s += go[i];
      grad_bias[co] += s;
    }
    for (std::size_t ci = 0; ci < g.cin; ++ci) {
      const T* src = in + ci * g.in_plane();
      T* gw = grad_weight + (co * g.cin + ci) * kk;
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx) {
          T s = 0;
          for (std::size_t y = 0; y < g.height; ++y) {
            const T* a = src + (y + ky) * wp + kx;
            const T* b = go + y * g.width;
            for (std::size_t x = 0; x < g.width; ++x) s += a[x] * b[x];
          }
          gw[ky * k + kx] += s;
        }
    }
  }
}

/// squareplus(x) = (x + sqrt(x^2 + 1)) / 2 and its derivative.
template <typename T>
void squareplus_ref(const T* in, T* out, T* deriv, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const T x = in[i];
    const T r = std::sqrt(x * x + T(1));
    out[i] = T(0.5) * (x + r);
    if (deriv) deriv[i] = T(0.5) * (T(1) + x / r);
  }
}

/// out = m + noise_scale * w_hat(m) * eps, with m = x0 + eta * e0.
template <typename T>
void marginal_ref(const T* x0, const T* e0, const T* eps, std::size_t n, MarginalCoeffs<T> c, T* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const T m = x0[i] + c.eta * e0[i];
    const T w_hat = c.bias + (T(1) - c.bias) * ((m + T(1)) * T(0.5));
    out[i] = m + c.noise_scale * w_hat * eps[i];
  }
}

/// Reverse posterior moments per element. Where the forward step variance
/// eta_t w_t^2 - eta_{t-1} w_{t-1}^2 is not positive, gamma is pinned to 1
/// and sigma2 to 0 (the vanishing-step-variance limit). Returns the number
/// of such elements.
template <typename T>
std::size_t posterior_ref(const T* xt, const T* x0, const T* e0, std::size_t n, PosteriorCoeffs<T> c, T* mu,
                          T* sigma2, T* gamma) {
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T wt = x0[i] + c.eta * e0[i];
    const T wp = x0[i] + c.eta_prev * e0[i];
    const T ht = c.bias + (T(1) - c.bias) * ((wt + T(1)) * T(0.5));
    const T hp = c.bias + (T(1) - c.bias) * ((wp + T(1)) * T(0.5));
    const T num = c.eta_prev * (hp * hp);
    const T den = c.eta * (ht * ht);
    const T d = den - num;
    T g, s2;
    if (d > T(0)) {
      g = num / den;
      s2 = c.kappa2 * g * d;
    } else {
      g = T(1);
      s2 = T(0);
      ++degenerate;
    }
    mu[i] = g * (xt[i] - c.alpha * e0[i]) + (T(1) - g) * (x0[i] + c.eta_prev * e0[i]);
    sigma2[i] = s2;
    gamma[i] = g;
  }
  return degenerate;
}

// ---------------------------------------------------------------------------
// AVX2 + FMA variants (float only). Only call when avx2_supported().

namespace avx2 {
void conv_forward(const ConvGeometry& g, const float* in, const float* weight, const float* bias, float* out);
void conv_weight_grad(const ConvGeometry& g, const float* in, const float* grad_out, float* grad_weight,
                      float* grad_bias);
void squareplus(const float* in, float* out, float* deriv, std::size_t n);
void marginal(const float* x0, const float* e0, const float* eps, std::size_t n, MarginalCoeffs<float> c, float* out);
std::size_t posterior(const float* xt, const float* x0, const float* e0, std::size_t n, PosteriorCoeffs<float> c,
                      float* mu, float* sigma2, float* gamma);
}  // namespace avx2

// ---------------------------------------------------------------------------
// Runtime dispatch

enum class Backend { scalar, avx2 };

/// True when the AVX2 variants were compiled in and the CPU has AVX2 + FMA.
bool avx2_supported();

/// Best supported backend unless overridden with set_backend.
Backend active_backend();

/// Overrides dispatch (tests, benchmarking). Throws std::invalid_argument
/// when the requested backend is unsupported. Not synchronized with
/// concurrent kernel calls.
void set_backend(Backend b);

const char* backend_name(Backend b);

void conv_forward_f32(const ConvGeometry& g, const float* in, const float* weight, const float* bias, float* out);
void conv_weight_grad_f32(const ConvGeometry& g, const float* in, const float* grad_out, float* grad_weight,
                          float* grad_bias);
void squareplus_f32(const float* in, float* out, float* deriv, std::size_t n);
void marginal_f32(const float* x0, const float* e0, const float* eps, std::size_t n, MarginalCoeffs<float> c,
                  float* out);
std::size_t posterior_f32(const float* xt, const float* x0, const float* e0, std::size_t n, PosteriorCoeffs<float> c,
                          float* mu, float* sigma2, float* gamma);

// Precision-generic entry points: float dispatches, double uses the reference.

template <typename T>
void conv_forward(const ConvGeometry& g, const T* in, const T* weight, const T* bias, T* out) {
  if constexpr (std::is_same_v<T, float>) conv_forward_f32(g, in, weight, bias, out);
  else conv_forward_ref(g, in, weight, bias, out);
}

template <typename T>
void conv_weight_grad(const ConvGeometry& g, const T* in, const T* grad_out, T* grad_weight, T* grad_bias) {
  if constexpr (std::is_same_v<T, float>) conv_weight_grad_f32(g, in, grad_out, grad_weight, grad_bias);
  else conv_weight_grad_ref(g, in, grad_out, grad_weight, grad_bias);
}

template <typename T>
void squareplus(const T* in, T* out, T* deriv, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) squareplus_f32(in, out, deriv, n);
  else squareplus_ref(in, out, deriv, n);
}

template <typename T>
void marginal(const T* x0, const T* e0, const T* eps, std::size_t n, MarginalCoeffs<T> c, T* out) {
  if constexpr (std::is_same_v<T, float>) marginal_f32(x0, e0, eps, n, c, out);
  else marginal_ref(x0, e0, eps, n, c, out);
}

template <typename T>
std::size_t posterior(const T* xt, const T* x0, const T* e0, std::size_t n, PosteriorCoeffs<T> c, T* mu, T* sigma2,
                      T* gamma) {
  if constexpr (std::is_same_v<T, float>) return posterior_f32(xt, x0, e0, n, c, mu, sigma2, gamma);
  else return posterior_ref(xt, x0, e0, n, c, mu, sigma2, gamma);
}

}  // namespace rawshift::simd
