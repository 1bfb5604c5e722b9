// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "rawshift/camlora.hpp"
#include "rawshift/model.hpp"
#include "rawshift/rng.hpp"

namespace rawshift {

struct GradCheckInput {
  Tensor<double> x_t;     // [4, H, W]
  Tensor<double> rgb;     // [3, 2H, 2W]
  Tensor<double> target;  // [4, H, W]
  int t = 1;
  CameraLabel camera;     // none checks base parameters only
};

struct GradCheckReport {
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  std::string worst;  // e.g. "base[123]" or "A(l0,c1)[5]"
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares the analytic gradient of the combined loss against central
/// differences on `coordinates` random parameters (base, and the camera's
/// adapters when present). Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckReport finite_diff_check(const TinyDenoiser<double>& model, const AdapterBank<double>& bank,
                                  const GradCheckInput& input, std::size_t coordinates, Rng& rng,
                                  double tolerance = 1e-4, double floor = 1e-8);

/// Loss and analytic gradient at the current parameters.
double loss_and_gradient(const TinyDenoiser<double>& model, const AdapterBank<double>& bank,
                         const GradCheckInput& input, Gradients<double>* grads);

}  // namespace rawshift
