// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Backend selection only; no intrinsics in this file.

#include <atomic>
#include <stdexcept>

#include "rawshift/simd/kernels.hpp"

namespace rawshift::simd {
namespace {

bool detect_avx2() {
#if defined(RAWSHIFT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect_avx2() ? Backend::avx2 : Backend::scalar};
  return b;
}

inline bool use_avx2() {
#if defined(RAWSHIFT_HAVE_AVX2)
  return current().load(std::memory_order_relaxed) == Backend::avx2;
#else
  return false;
#endif
}

}  // namespace

bool avx2_supported() {
  static const bool ok = detect_avx2();
  return ok;
}

Backend active_backend() { return current().load(); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_supported()) throw std::invalid_argument("AVX2 backend not supported on this CPU");
  current().store(b);
}

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

#if defined(RAWSHIFT_HAVE_AVX2)
#define RAWSHIFT_DISPATCH(call_avx2, call_ref) \
  if (use_avx2()) return call_avx2;            \
  return call_ref
#else
#define RAWSHIFT_DISPATCH(call_avx2, call_ref) return call_ref
#endif

void conv_forward_f32(const ConvGeometry& g, const float* in, const float* weight, const float* bias, float* out) {
  RAWSHIFT_DISPATCH(avx2::conv_forward(g, in, weight, bias, out), conv_forward_ref(g, in, weight, bias, out));
}

void conv_weight_grad_f32(const ConvGeometry& g, const float* in, const float* grad_out, float* grad_weight,
                          float* grad_bias) {
  RAWSHIFT_DISPATCH(avx2::conv_weight_grad(g, in, grad_out, grad_weight, grad_bias),
                    conv_weight_grad_ref(g, in, grad_out, grad_weight, grad_bias));
}

void squareplus_f32(const float* in, float* out, float* deriv, std::size_t n) {
  RAWSHIFT_DISPATCH(avx2::squareplus(in, out, deriv, n), squareplus_ref(in, out, deriv, n));
}

void marginal_f32(const float* x0, const float* e0, const float* eps, std::size_t n, MarginalCoeffs<float> c,
                  float* out) {
  RAWSHIFT_DISPATCH(avx2::marginal(x0, e0, eps, n, c, out), marginal_ref(x0, e0, eps, n, c, out));
}

std::size_t posterior_f32(const float* xt, const float* x0, const float* e0, std::size_t n, PosteriorCoeffs<float> c,
                          float* mu, float* sigma2, float* gamma) {
  RAWSHIFT_DISPATCH(avx2::posterior(xt, x0, e0, n, c, mu, sigma2, gamma),
                    posterior_ref(xt, x0, e0, n, c, mu, sigma2, gamma));
}

#undef RAWSHIFT_DISPATCH

}  // namespace rawshift::simd
