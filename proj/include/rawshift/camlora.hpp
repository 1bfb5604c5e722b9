// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Camera-aware low-rank adapters: each adaptable d x k weight W gets, per
// camera i, an update B_i A_i with A_i in R^{r x k}, B_i in R^{d x r}.
// B starts at zero so a fresh adapter leaves the layer unchanged. There is
// no alpha/r scaling; the effective weight is plain W + B A.

#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rawshift/rng.hpp"
#include "rawshift/tensor.hpp"
#include "rawshift/types.hpp"

namespace rawshift {

template <typename T>
struct LoraAdapter {
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t rank = 0;
  CameraLabel camera;
  Tensor<T> A;  // [rank, k]
  Tensor<T> B;  // [d, rank]

  /// B A as a dense [d, k] matrix.
  Tensor<T> delta() const;
  std::size_t param_count() const { return rank * (d + k); }
};

struct LayerDims {
  std::size_t d = 0;
  std::size_t k = 0;
};

template <typename T>
class AdapterBank {
 public:
  /// Largest admissible rank for a d x k layer: min(d, k) / 2.
  static std::size_t max_rank(std::size_t d, std::size_t k) { return std::min(d, k) / 2; }

  void register_layer(int layer, std::size_t d, std::size_t k);
  const std::map<int, LayerDims>& layers() const noexcept { return layers_; }

  /// Adds adapters for `camera` on every registered layer with rank
  /// min(rank, max_rank(d, k)). B = 0, A ~ N(0, 1/r). Throws on collision.
  void add_camera(CameraLabel camera, std::size_t rank, Rng& rng);

  /// Inserts a prebuilt adapter (checkpoint loading). Throws on collision or
  /// dimension mismatch.
  void insert(int layer, LoraAdapter<T> adapter);

  bool contains(CameraLabel camera) const;
  bool contains(int layer, CameraLabel camera) const;
  LoraAdapter<T>& adapter(int layer, CameraLabel camera);
  const LoraAdapter<T>& adapter(int layer, CameraLabel camera) const;
  std::vector<CameraLabel> cameras() const;

  /// W + B_c A_c for `camera`, or W unchanged when camera is none.
  /// Throws UnknownCameraError for an unregistered label.
  Tensor<T> effective_weight(std::span<const T> base, int layer, CameraLabel camera) const;

  /// Sum over (layer, camera) of r (d + k).
  std::size_t param_count() const;
  std::size_t param_count(CameraLabel camera) const;

  template <typename F>
  void for_each(F&& f) {
    for (auto& [key, a] : adapters_) f(key.first, a);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [key, a] : adapters_) f(key.first, a);
  }

  template <typename U>
  AdapterBank<U> cast() const;

 private:
  std::map<int, LayerDims> layers_;
  std::map<std::pair<int, int>, LoraAdapter<T>> adapters_;  // (layer, camera)
};

/// Which parameters a training step may update.
enum class TrainMode {
  combined,              // base + the batch camera's adapters
  few_shot,              // only the batch camera's adapters; base frozen
  few_shot_single_layer  // only one adapter of the batch camera; base frozen
};

struct TrainableSet {
  bool base = false;
  std::vector<std::pair<int, CameraLabel>> adapters;

  bool allows(int layer, CameraLabel camera) const;
};

/// Routes one batch: all labels must agree (mixed-camera batches are
/// rejected) and, unless the label is none, the camera must be in the bank.
template <typename T>
TrainableSet route_gradients(const AdapterBank<T>& bank, std::span<const CameraLabel> batch_labels, TrainMode mode,
                             int single_layer = -1);

}  // namespace rawshift
