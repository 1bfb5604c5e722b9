// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <doctest.h>

#include "rawshift/kernel.hpp"
#include "rawshift/rng.hpp"
#include "rawshift/schedule.hpp"
#include "rawshift/simd/kernels.hpp"
#include "test_util.hpp"

using namespace rawshift;

namespace {

// Independent re-derivation of the reverse posterior for one element.
struct RefPost {
  double mu, sigma2, gamma;
};
RefPost ref_posterior(double xt, double x0, double e0, double eta, double eta_prev, double kappa, double b) {
  const double wt = x0 + eta * e0, wp = x0 + eta_prev * e0;
  const double ht = b + (1 - b) * (wt + 1) / 2, hp = b + (1 - b) * (wp + 1) / 2;
  const double g = eta_prev * hp * hp / (eta * ht * ht);
  const double alpha = eta - eta_prev;
  return {g * (xt - alpha * e0) + (1 - g) * (x0 + eta_prev * e0),
          kappa * kappa * g * (eta * ht * ht - eta_prev * hp * hp), g};
}

Tensor<double> constant(Shape s, double v) { return Tensor<double>(std::move(s), v); }

}  // namespace

TEST_CASE("schedule endpoints and geometric interior") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  CHECK(s.steps() == 4);
  CHECK(s.eta(0) == 0.0);
  CHECK(s.eta(4) == 0.999);
  CHECK(s.eta(1) == doctest::Approx(0.001).epsilon(1e-15));
  for (int t = 1; t <= 4; ++t)
    CHECK(s.eta(t) == doctest::Approx(0.001 * std::pow(999.0, (t - 1) / 3.0)).epsilon(1e-13));
  double sum = 0;
  for (int t = 1; t <= 4; ++t) {
    CHECK(s.alpha(t) > 0);
    sum += s.alpha(t);
  }
  CHECK(sum == doctest::Approx(s.eta(4)).epsilon(1e-15));
  CHECK(s.kappa() == 2.0);
  CHECK(s.bias() == 0.1);
  CHECK(make_schedule(1).eta(1) == 0.999);
}

TEST_CASE("schedule validation and serialization") {
  CHECK_THROWS(make_schedule(0));
  CHECK_THROWS(make_schedule(4, 0.0, 0.1));
  CHECK_THROWS(make_schedule(4, -1.0, 0.1));
  CHECK_THROWS(make_schedule(4, 2.0, 0.0));
  CHECK_THROWS(make_schedule(4, 2.0, 1.5));
  CHECK_NOTHROW(make_schedule(4, 2.0, 1.0));
  CHECK_THROWS(Schedule({0.0, 0.5, 0.4, 0.999}, 2.0, 0.1));
  CHECK_THROWS(Schedule({0.1, 0.999}, 2.0, 0.1));
  CHECK_THROWS(make_schedule(4).alpha(0));
  const Schedule s = make_schedule(6, 1.5, 0.2);
  const Schedule r = Schedule::from_json(s.to_json());
  CHECK(r.steps() == 6);
  CHECK(r.kappa() == 1.5);
  CHECK(r.bias() == 0.2);
  for (int t = 0; t <= 6; ++t) CHECK(r.eta(t) == s.eta(t));
  CHECK(s.to_json().at("T") == 6);
}

TEST_CASE("weight map boundaries") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  auto x0 = testutil::uniform_tensor<double>({4, 3, 3}, 1);
  auto y0 = testutil::uniform_tensor<double>({4, 3, 3}, 2);
  Tensor<double> e0(x0.shape());
  for (std::size_t i = 0; i < e0.size(); ++i) e0[i] = y0[i] - x0[i];

  const auto m0 = weight_map(x0, e0, s, 0);
  CHECK(m0.w == x0);

  const Schedule unit({0.0, 0.3, 1.0}, 2.0, 0.1);
  const auto mt = weight_map(x0, e0, unit, 2);
  for (std::size_t i = 0; i < x0.size(); ++i) CHECK(mt.w[i] == doctest::Approx(y0[i]).epsilon(1e-15));

  const auto dark = weight_map(constant({4, 2, 2}, -1.0), constant({4, 2, 2}, 0.0), s, 3);
  for (double v : dark.w_hat.values()) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));

  for (int t = 0; t <= 4; ++t) {
    const auto m = weight_map(x0, e0, s, t);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      CHECK(m.w[i] >= -1.0);
      CHECK(m.w[i] <= 1.0);
      CHECK(m.w_hat[i] >= 0.1 - 1e-15);
      CHECK(m.w_hat[i] <= 1.0 + 1e-15);
      CHECK(m.w_hat[i] == doctest::Approx(0.1 + 0.9 * (m.w[i] + 1) / 2).epsilon(1e-15));
    }
  }
  const auto ones = weight_map(x0, e0, s.with_bias(1.0), 2);
  for (double v : ones.w_hat.values()) CHECK(v == 1.0);
  CHECK_THROWS(weight_map(x0, e0, s, 5));
  CHECK_THROWS(weight_map(x0, constant({4, 2, 2}, 0.0), s, 1));
}

TEST_CASE("zero-noise limits of the forward process") {
  const Schedule s = make_schedule(4, 1e-300, 0.1);
  auto x0 = testutil::uniform_tensor<double>({4, 4, 4}, 3);
  auto y0 = testutil::uniform_tensor<double>({4, 4, 4}, 4);
  Tensor<double> e0(x0.shape());
  for (std::size_t i = 0; i < e0.size(); ++i) e0[i] = y0[i] - x0[i];
  Rng rng(9);
  NoisyState<double> prev{x0, 0};
  for (int t = 1; t <= 4; ++t) {
    const auto marg = forward_marginal_sample(x0, e0, s, t, rng);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(marg.x[i] == x0[i] + s.eta(t) * e0[i]);
    const auto step = forward_step_sample(prev, x0, e0, s, rng);
    CHECK(step.state.t == t);
    for (std::size_t i = 0; i < x0.size(); ++i)
      CHECK(step.state.x[i] - prev.x[i] == doctest::Approx(s.alpha(t) * e0[i]).epsilon(1e-12));
    prev = step.state;
  }
}

TEST_CASE("marginal from explicit noise and monotone noise ordering") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  Tensor<double> x0 = constant({4, 1, 2}, 0.0);
  Tensor<double> e0(x0.shape());
  for (std::size_t c = 0; c < 4; ++c) {
    e0.at(c, 0, 0) = -0.6;  // darker y0
    e0.at(c, 0, 1) = 0.7;   // brighter y0
  }
  const auto xt = forward_marginal_from_noise(x0, e0, s, 4, constant({4, 1, 2}, 1.0));
  const double eta = s.eta(4);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t x = 0; x < 2; ++x) {
      const double w = eta * e0.at(c, 0, x);
      const double expect = w + 2.0 * std::sqrt(eta) * (0.1 + 0.9 * (w + 1) / 2);
      CHECK(xt.at(c, 0, x) == doctest::Approx(expect).epsilon(1e-14));
    }
    const double dark_dev = xt.at(c, 0, 0) - eta * e0.at(c, 0, 0);
    const double bright_dev = xt.at(c, 0, 1) - eta * e0.at(c, 0, 1);
    CHECK(bright_dev >= dark_dev);
  }
}

TEST_CASE("forward step clamps a negative step variance and counts it") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  // x0 bright, y0 dark: w falls with t so the step variance goes negative.
  Tensor<double> x0 = constant({4, 2, 2}, 1.0), e0 = constant({4, 2, 2}, -2.0);
  Rng rng(1);
  NoisyState<double> prev{x0, 3};
  const auto r = forward_step_sample(prev, x0, e0, s, rng);
  CHECK(r.clamped == 16);
  for (std::size_t i = 0; i < x0.size(); ++i) CHECK(std::isfinite(r.state.x[i]));
  NoisyState<double> ok{x0, 0};
  CHECK(forward_step_sample(ok, x0, constant({4, 2, 2}, 0.0), s, rng).clamped == 0);
}

TEST_CASE("posterior matches an independent derivation") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double kappa = rng.uniform(0.5, 4.0), b = rng.uniform(0.05, 0.5);
    const Schedule s = make_schedule(4, kappa, b);
    const int t = rng.uniform_int(2, 4);
    auto x0 = testutil::uniform_tensor<double>({4, 3, 3}, 100 + trial);
    auto y0 = testutil::uniform_tensor<double>({4, 3, 3}, 200 + trial);
    auto xt = testutil::uniform_tensor<double>({4, 3, 3}, 300 + trial);
    Tensor<double> e0(x0.shape());
    for (std::size_t i = 0; i < e0.size(); ++i) e0[i] = y0[i] - x0[i];
    const auto p = posterior_params(NoisyState<double>{xt, t}, x0, e0, s);
    CHECK(p.t == t);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const RefPost r = ref_posterior(xt[i], x0[i], e0[i], s.eta(t), s.eta(t - 1), kappa, b);
      if (r.sigma2 <= 0) continue;
      CHECK(p.gamma[i] == doctest::Approx(r.gamma).epsilon(1e-13));
      CHECK(p.mu[i] == doctest::Approx(r.mu).epsilon(1e-12));
      CHECK(p.sigma2[i] == doctest::Approx(r.sigma2).epsilon(1e-12));
      CHECK(p.gamma[i] >= 0.0);
      CHECK(p.gamma[i] < 1.0);
      const ScalarPosterior sp = posterior_scalar(xt[i], x0[i], e0[i], s, t);
      CHECK(sp.mu == doctest::Approx(p.mu[i]).epsilon(1e-14));
      CHECK(sp.sigma2 == doctest::Approx(p.sigma2[i]).epsilon(1e-14));
      // Convexity of the mean.
      const double noisy = xt[i] - s.alpha(t) * e0[i], clean = x0[i] + s.eta(t - 1) * e0[i];
      CHECK(p.mu[i] >= std::min(noisy, clean) - 1e-12);
      CHECK(p.mu[i] <= std::max(noisy, clean) + 1e-12);
    }
  }
}

TEST_CASE("posterior at t = 1 is deterministic and returns x0") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  auto x0 = testutil::uniform_tensor<double>({4, 4, 4}, 10);
  auto e0 = testutil::uniform_tensor<double>({4, 4, 4}, 11, -0.5, 0.5);
  auto xt = testutil::uniform_tensor<double>({4, 4, 4}, 12);
  const auto p = posterior_params(NoisyState<double>{xt, 1}, x0, e0, s);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    CHECK(p.gamma[i] == 0.0);
    CHECK(p.sigma2[i] == 0.0);
    CHECK(p.mu[i] == x0[i]);
  }
  Rng rng(3);
  const auto out = reverse_step_sample(p, rng);
  CHECK(out.t == 0);
  CHECK(out.x == x0);
}

TEST_CASE("bias 1 reduces the posterior to the isotropic formulas") {
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const double kappa = rng.uniform(0.5, 4.0);
    const Schedule s = make_schedule(4, kappa, 1.0);
    const int t = rng.uniform_int(1, 4);
    auto x0 = testutil::uniform_tensor<double>({4, 4, 4}, 400 + trial);
    auto e0 = testutil::uniform_tensor<double>({4, 4, 4}, 500 + trial);
    auto xt = testutil::uniform_tensor<double>({4, 4, 4}, 600 + trial, -3, 3);
    const auto p = posterior_params(NoisyState<double>{xt, t}, x0, e0, s);
    const double et = s.eta(t), ep = s.eta(t - 1), a = s.alpha(t);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      CHECK(std::abs(p.gamma[i] - ep / et) <= 1e-12);
      CHECK(std::abs(p.mu[i] - (ep / et * xt[i] + a / et * x0[i])) <= 1e-12);
      CHECK(std::abs(p.sigma2[i] - kappa * kappa * ep / et * a) <= 1e-12);
    }
    CHECK(p.degenerate == 0);
  }
}

TEST_CASE("reverse step: zero variance is exact, otherwise centred on mu") {
  PosteriorParams<double> p{constant({1, 1, 1}, 0.25), constant({1, 1, 1}, 0.0), constant({1, 1, 1}, 0.0), 2, 0};
  Rng rng(4);
  CHECK(reverse_step_sample(p, rng).x[0] == 0.25);

  const std::size_t n = 20000;
  PosteriorParams<double> q{constant({1, 1, 2}, 0.3), Tensor<double>({1, 1, 2}), constant({1, 1, 2}, 0.5), 3, 0};
  q.sigma2[0] = 0.04;
  q.sigma2[1] = 0.36;
  double s0 = 0, s1 = 0, ss0 = 0, ss1 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = reverse_step_sample(q, rng).x;
    s0 += x[0];
    s1 += x[1];
    ss0 += (x[0] - 0.3) * (x[0] - 0.3);
    ss1 += (x[1] - 0.3) * (x[1] - 0.3);
  }
  CHECK(std::abs(s0 / n - 0.3) < 3 * 0.2 / std::sqrt(double(n)));
  CHECK(std::abs(s1 / n - 0.3) < 3 * 0.6 / std::sqrt(double(n)));
  const double ratio = std::sqrt(ss1 / ss0);
  CHECK(ratio == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("marginal sample moments at a fixed pixel") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  const Tensor<double> x0 = constant({1, 1, 1}, -0.2), e0 = constant({1, 1, 1}, 0.5);
  Rng rng(8);
  const std::size_t n = 100000;
  for (int t = 1; t <= 4; ++t) {
    double sum = 0, sq = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double v = forward_marginal_sample(x0, e0, s, t, rng).x[0];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n, var = sq / n - mean * mean;
    const double w = -0.2 + s.eta(t) * 0.5, wh = 0.1 + 0.9 * (w + 1) / 2;
    const double var_ref = 4.0 * s.eta(t) * wh * wh;
    CHECK(std::abs(mean - w) < 3 * std::sqrt(var_ref / n));
    CHECK(var / var_ref == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("float and double kernels agree") {
  const Schedule s = make_schedule(4, 2.0, 0.1);
  auto x0 = testutil::uniform_tensor<double>({4, 5, 7}, 31);
  auto e0 = testutil::uniform_tensor<double>({4, 5, 7}, 32, -0.5, 0.5);
  auto xt = testutil::uniform_tensor<double>({4, 5, 7}, 33);
  for (int t = 1; t <= 4; ++t) {
    const auto pd = posterior_params(NoisyState<double>{xt, t}, x0, e0, s);
    const auto pf =
        posterior_params(NoisyState<float>{xt.cast<float>(), t}, x0.cast<float>(), e0.cast<float>(), s);
    for (std::size_t i = 0; i < x0.size(); ++i) {
      CHECK(pf.mu[i] == doctest::Approx(pd.mu[i]).epsilon(1e-5));
      CHECK(pf.sigma2[i] == doctest::Approx(pd.sigma2[i]).epsilon(1e-4));
    }
  }
}

// ---------------------------------------------------------------------------
// Vector kernels vs scalar references.

TEST_CASE("SIMD kernels match the scalar references") {
  if (!simd::avx2_supported()) {
    MESSAGE("AVX2 unavailable; only the scalar path is exercised");
    return;
  }
  const simd::Backend saved = simd::active_backend();
  simd::set_backend(simd::Backend::avx2);

  for (std::size_t n : {1u, 7u, 8u, 9u, 31u, 64u, 101u}) {
    auto a = testutil::uniform_tensor<float>({n}, 40 + n);
    auto b = testutil::uniform_tensor<float>({n}, 50 + n, -0.5, 0.5);
    auto c = testutil::uniform_tensor<float>({n}, 60 + n, -3, 3);
    std::vector<float> o1(n), o2(n), d1(n), d2(n), g1(n), g2(n);

    simd::squareplus_ref(c.data(), o1.data(), d1.data(), n);
    simd::squareplus_f32(c.data(), o2.data(), d2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-6));
      CHECK(d2[i] == doctest::Approx(d1[i]).epsilon(1e-6));
    }

    const simd::MarginalCoeffs<float> mc{0.3f, 0.9f, 0.1f};
    simd::marginal_ref(a.data(), b.data(), c.data(), n, mc, o1.data());
    simd::marginal_f32(a.data(), b.data(), c.data(), n, mc, o2.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-5));

    const simd::PosteriorCoeffs<float> pc{0.3f, 0.03f, 0.27f, 4.0f, 0.1f};
    const std::size_t k1 = simd::posterior_ref(c.data(), a.data(), b.data(), n, pc, o1.data(), d1.data(), g1.data());
    const std::size_t k2 = simd::posterior_f32(c.data(), a.data(), b.data(), n, pc, o2.data(), d2.data(), g2.data());
    CHECK(k1 == k2);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-5));
      CHECK(d2[i] == doctest::Approx(d1[i]).epsilon(1e-5));
      CHECK(g2[i] == doctest::Approx(g1[i]).epsilon(1e-5));
    }
  }

  // Degenerate elements are pinned identically on both paths.
  {
    std::vector<float> x0(9, 1.0f), e0(9, -2.0f), xt(9, 0.5f), m1(9), m2(9), s1(9), s2(9), g1(9), g2(9);
    const simd::PosteriorCoeffs<float> pc{0.999f, 0.3f, 0.699f, 4.0f, 0.1f};
    CHECK(simd::posterior_ref(xt.data(), x0.data(), e0.data(), 9, pc, m1.data(), s1.data(), g1.data()) == 9);
    CHECK(simd::posterior_f32(xt.data(), x0.data(), e0.data(), 9, pc, m2.data(), s2.data(), g2.data()) == 9);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(g2[i] == 1.0f);
      CHECK(s2[i] == 0.0f);
      CHECK(m2[i] == doctest::Approx(m1[i]).epsilon(1e-6));
    }
  }

  for (std::size_t k : {1u, 3u}) {
    for (std::size_t w : {1u, 5u, 8u, 13u, 19u}) {
      const simd::ConvGeometry g{5, 11, 3, w, k};
      auto in = testutil::uniform_tensor<float>({g.cin * g.in_plane()}, 70 + w);
      auto wt = testutil::uniform_tensor<float>({g.cout * g.cin * g.taps()}, 80 + w);
      auto bias = testutil::uniform_tensor<float>({g.cout}, 90 + w);
      auto go = testutil::uniform_tensor<float>({g.cout * g.out_plane()}, 95 + w);
      std::vector<float> o1(g.cout * g.out_plane()), o2(o1.size());
      simd::conv_forward_ref(g, in.data(), wt.data(), bias.data(), o1.data());
      simd::conv_forward_f32(g, in.data(), wt.data(), bias.data(), o2.data());
      for (std::size_t i = 0; i < o1.size(); ++i) CHECK(o2[i] == doctest::Approx(o1[i]).epsilon(1e-5));

      std::vector<float> gw1(wt.size(), 0.5f), gw2(wt.size(), 0.5f), gb1(g.cout, 0.25f), gb2(g.cout, 0.25f);
      simd::conv_weight_grad_ref(g, in.data(), go.data(), gw1.data(), gb1.data());
      simd::conv_weight_grad_f32(g, in.data(), go.data(), gw2.data(), gb2.data());
      for (std::size_t i = 0; i < gw1.size(); ++i) CHECK(gw2[i] == doctest::Approx(gw1[i]).epsilon(1e-4));
      for (std::size_t i = 0; i < gb1.size(); ++i) CHECK(gb2[i] == doctest::Approx(gb1[i]).epsilon(1e-5));
    }
  }
  simd::set_backend(saved);
}

TEST_CASE("backend switching") {
  const simd::Backend saved = simd::active_backend();
  simd::set_backend(simd::Backend::scalar);
  CHECK(simd::active_backend() == simd::Backend::scalar);
  CHECK(std::string(simd::backend_name(simd::Backend::scalar)) == "scalar");
  if (!simd::avx2_supported()) CHECK_THROWS(simd::set_backend(simd::Backend::avx2));
  simd::set_backend(saved);
}
