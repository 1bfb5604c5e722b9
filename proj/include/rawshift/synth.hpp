// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic camera pipeline: latent linear scenes rendered into a Bayer
// mosaic (the RAW side) and a tone-mapped RGB image (the ISP side).

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rawshift/manifest.hpp"
#include "rawshift/rng.hpp"
#include "rawshift/tensor.hpp"

namespace rawshift {

struct SyntheticCamera {
  std::array<double, 3> wb_gains{1.0, 1.0, 1.0};
  double digital_gain = 1.0;
  double gamma = 1.0;     // in (0.3, 1]
  int quant_bits = 0;     // RGB quantization, 0 = off
  // Sensor model (RAW side only).
  double shot_noise = 0.0;  // variance per unit signal
  double read_noise = 0.0;  // std
  double black_level = 0.0;
  double white_level = 1.0;
  bool integer_adc = false;  // round sensor values to whole codes

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;

  nlohmann::json to_json() const;
  static SyntheticCamera from_json(const nlohmann::json& j);

  static SyntheticCamera identity();
  /// Gamma + gain camera with a noisy 10-bit sensor.
  static SyntheticCamera gamma_gain(double gamma, double gain);
  /// Built-in presets, index 0.. (cycled when more are requested).
  static SyntheticCamera preset(std::size_t index);

  friend bool operator==(const SyntheticCamera&, const SyntheticCamera&) = default;
};

struct SceneOptions {
  double highlight_probability = 0.5;  // chance an image carries saturated highlights
  double highlight_min = 1.2;          // latent radiance of highlights
  double highlight_max = 3.0;
  double floor = 0.005;
};

/// Smooth random latent radiance [3, size, size], nonnegative; highlights
/// may exceed 1.
Tensor<float> generate_scene(std::size_t size, Rng& rng, const SceneOptions& opts = {});

struct RenderedPair {
  Tensor<float> mosaic;  // [1, size, size] sensor units
  Tensor<float> rgb;     // [3, size, size] in [0, 1]
};

/// Sensor noise draws from `rng`; the RGB rendering itself is deterministic.
RenderedPair render(const SyntheticCamera& cam, const Tensor<float>& latent, Rng& rng);

/// Sensor-clipped latent mapped through the ISP without quantization.
double isp_curve(const SyntheticCamera& cam, std::size_t channel, double latent);

struct SynthConfig {
  std::vector<SyntheticCamera> cameras;
  std::size_t count = 1;  // pairs per camera
  std::size_t size = 64;  // full-resolution side, even, >= 16
  std::uint64_t seed = 0;
  SceneOptions scene;
  int first_label = 0;  // camera i gets label first_label + i
};

/// Writes <out>/<cam>_<index>_{raw,rgb}.sptr and <out>/manifest.json.
Manifest synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace rawshift
