// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Small fully-convolutional conditional denoiser predicting x0 from
// (x_t, full-resolution RGB, t, camera). Layout:
//
//   input  = concat(x_t [4], space_to_depth(rgb) [12])      16 x H x W
//   L0 1x1 16->C, L1 3x3 C->C, L2 3x3 C->C, L3 1x1 C->C     each followed by
//          a per-channel timestep scale (1 + e[stage][t]) and squareplus
//   L4 1x1 C->4, then tanh                                   prediction in (-1, 1)
//
// The 1x1 layers are the camera-adaptable ones: their weights are d x k
// matrices and receive per-camera low-rank updates from an AdapterBank.
// Backpropagation is hand-written; see finite_diff_check for its oracle.

#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rawshift/camlora.hpp"
#include "rawshift/rng.hpp"
#include "rawshift/tensor.hpp"

namespace rawshift {

struct DenoiserArch {
  std::size_t width = 16;
  int timesteps = 4;

  nlohmann::json to_json() const { return {{"width", width}, {"timesteps", timesteps}}; }
  static DenoiserArch from_json(const nlohmann::json& j) {
    return DenoiserArch{j.at("width").get<std::size_t>(), j.at("timesteps").get<int>()};
  }
  friend bool operator==(const DenoiserArch&, const DenoiserArch&) = default;
};

struct ConvLayer {
  std::size_t cin = 0;
  std::size_t cout = 0;
  std::size_t kernel = 1;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
  bool adaptable = false;

  std::size_t weight_size() const { return cout * cin * kernel * kernel; }
};

/// Effective (W + B A) weights of the adaptable layers for one camera.
template <typename T>
using EffectiveWeights = std::map<int, Tensor<T>>;

template <typename T>
struct Gradients {
  std::vector<T> base;
  // (layer, camera id) -> (dL/dA, dL/dB)
  std::map<std::pair<int, int>, std::pair<Tensor<T>, Tensor<T>>> adapters;

  void zero();
  /// grads += scale * other, adding any missing adapter entries.
  void accumulate(const Gradients& other, T scale = T(1));
};

template <typename T>
class TinyDenoiser {
 public:
  static constexpr std::size_t kInputChannels = 16;
  static constexpr std::size_t kOutputChannels = 4;
  static constexpr std::size_t kStages = 4;
  static constexpr std::size_t kLayers = 5;

  explicit TinyDenoiser(DenoiserArch arch = {});

  const DenoiserArch& arch() const noexcept { return arch_; }
  const std::vector<ConvLayer>& layers() const noexcept { return layers_; }
  std::size_t num_params() const noexcept { return params_.size(); }
  std::span<T> params() noexcept { return params_; }
  std::span<const T> params() const noexcept { return params_; }

  std::span<const T> layer_weight(std::size_t layer) const;
  std::span<T> layer_weight(std::size_t layer);
  /// Offset of the timestep embedding e[stage][t] (width entries), 1 <= t <= T.
  std::size_t embedding_offset(std::size_t stage, int t) const;

  /// He-style Gaussian init for hidden layers, a small final layer, zero
  /// biases and zero timestep embeddings.
  void init(Rng& rng);

  /// Registers the 1x1 layers with the bank (layer id = index in layers()).
  void register_adapter_layers(AdapterBank<T>& bank) const;

  EffectiveWeights<T> effective_weights(const AdapterBank<T>& bank, CameraLabel camera) const;

  struct Cache {
    int t = 0;
    CameraLabel camera;
    std::size_t height = 0, width = 0;
    EffectiveWeights<T> weights;
    std::vector<Tensor<T>> inputs;   // per layer; padded for 3x3 layers
    std::vector<Tensor<T>> pre;      // per stage, conv output before the timestep scale
    std::vector<Tensor<T>> deriv;    // per stage, squareplus'(scaled)
    Tensor<T> output;
  };

  /// x_t [4, H, W], rgb [3, 2H, 2W] (both in [-1, 1]), 1 <= t <= T.
  Tensor<T> forward(const Tensor<T>& x_t, const Tensor<T>& rgb, int t, const EffectiveWeights<T>& weights,
                    Cache* cache = nullptr) const;
  Tensor<T> forward(const Tensor<T>& x_t, const Tensor<T>& rgb, int t, const AdapterBank<T>& bank,
                    CameraLabel camera, Cache* cache = nullptr) const;

  /// Accumulates dL/dtheta for upstream gradient dL/d(output). Base gradients
  /// are always produced; adapter gradients only for the cached camera.
  void backward(const Cache& cache, const Tensor<T>& grad_output, const AdapterBank<T>& bank,
                Gradients<T>& grads) const;

  Gradients<T> make_gradients() const;

  template <typename U>
  TinyDenoiser<U> cast() const;

 private:
  DenoiserArch arch_;
  std::vector<ConvLayer> layers_;
  std::size_t embedding_base_ = 0;
  std::vector<T> params_;

  template <typename U>
  friend class TinyDenoiser;
};

}  // namespace rawshift
