// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rawshift/loss.hpp"

namespace rawshift {

double loss_and_gradient(const TinyDenoiser<double>& model, const AdapterBank<double>& bank,
                         const GradCheckInput& in, Gradients<double>* grads) {
  typename TinyDenoiser<double>::Cache cache;
  const Tensor<double> pred = model.forward(in.x_t, in.rgb, in.t, bank, in.camera, grads ? &cache : nullptr);
  Tensor<double> g(pred.shape());
  const LossBreakdown l =
      combined_loss<double>(pred.values(), in.target.values(), kLogL1Epsilon, grads ? g.values() : std::span<double>{});
  if (grads) model.backward(cache, g, bank, *grads);
  return l.total;
}

GradCheckReport finite_diff_check(const TinyDenoiser<double>& model, const AdapterBank<double>& bank,
                                  const GradCheckInput& input, std::size_t coordinates, Rng& rng, double tolerance,
                                  double floor) {
  Gradients<double> grads = model.make_gradients();
  loss_and_gradient(model, bank, input, &grads);

  // Every perturbable scalar: a name, a setter, and its analytic gradient.
  struct Coord {
    std::string name;
    std::function<double&(TinyDenoiser<double>&, AdapterBank<double>&)> ref;
    double analytic;
  };
  std::vector<Coord> all;
  for (std::size_t i = 0; i < model.num_params(); ++i)
    all.push_back({"base[" + std::to_string(i) + "]",
                   [i](TinyDenoiser<double>& m, AdapterBank<double>&) -> double& { return m.params()[i]; },
                   grads.base[i]});
  if (!input.camera.is_none()) {
    for (const auto& [key, g] : grads.adapters) {
      const auto [layer, cam] = key;
      const std::string tag = "(l" + std::to_string(layer) + ",c" + std::to_string(cam) + ")";
      for (std::size_t i = 0; i < g.first.size(); ++i)
        all.push_back({"A" + tag + "[" + std::to_string(i) + "]",
                       [layer, cam, i](TinyDenoiser<double>&, AdapterBank<double>& b) -> double& {
                         return b.adapter(layer, CameraLabel{cam}).A[i];
                       },
                       g.first[i]});
      for (std::size_t i = 0; i < g.second.size(); ++i)
        all.push_back({"B" + tag + "[" + std::to_string(i) + "]",
                       [layer, cam, i](TinyDenoiser<double>&, AdapterBank<double>& b) -> double& {
                         return b.adapter(layer, CameraLabel{cam}).B[i];
                       },
                       g.second[i]});
    }
  }
  if (coordinates > all.size()) coordinates = all.size();
  // Partial Fisher-Yates for a uniform subset.
  for (std::size_t k = 0; k < coordinates; ++k) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(k), static_cast<int>(all.size()) - 1));
    std::swap(all[k], all[j]);
  }

  GradCheckReport rep;
  rep.tolerance = tolerance;
  rep.coordinates = coordinates;
  TinyDenoiser<double> m = model;
  AdapterBank<double> b = bank;
  for (std::size_t k = 0; k < coordinates; ++k) {
    double& p = all[k].ref(m, b);
    const double orig = p;
    // Fourth-order central stencil; truncation error is negligible at this
    // step, which keeps roundoff well below the tolerance.
    const double h = 1e-5 * std::max(1.0, std::abs(orig));
    auto loss_at = [&](double v) {
      p = v;
      return loss_and_gradient(m, b, input, nullptr);
    };
    const double l2p = loss_at(orig + 2 * h), l1p = loss_at(orig + h);
    const double l1m = loss_at(orig - h), l2m = loss_at(orig - 2 * h);
    p = orig;
    const double numeric = (8 * (l1p - l1m) - (l2p - l2m)) / (12 * h);
    const double a = all[k].analytic;
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (!std::isfinite(rel) || rel > rep.max_rel_error || rep.worst.empty()) {
      rep.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
      rep.worst = all[k].name;
      rep.worst_analytic = a;
      rep.worst_numeric = numeric;
    }
  }
  rep.passed = rep.coordinates > 0 && rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace rawshift
