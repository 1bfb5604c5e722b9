// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/camlora.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rawshift {

template <typename T>
Tensor<T> LoraAdapter<T>::delta() const {
  Tensor<T> out({d, k});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t q = 0; q < rank; ++q) {
      const T b = B[i * rank + q];
      if (b == T(0)) continue;
      for (std::size_t j = 0; j < k; ++j) out[i * k + j] += b * A[q * k + j];
    }
  return out;
}

template <typename T>
void AdapterBank<T>::register_layer(int layer, std::size_t d, std::size_t k) {
  if (d == 0 || k == 0) throw std::invalid_argument("adapter layer dims must be positive");
  if (max_rank(d, k) == 0) throw std::invalid_argument("layer too small for a low-rank adapter");
  if (!layers_.emplace(layer, LayerDims{d, k}).second)
    throw std::invalid_argument("layer " + std::to_string(layer) + " already registered");
}

template <typename T>
void AdapterBank<T>::add_camera(CameraLabel camera, std::size_t rank, Rng& rng) {
  if (camera.is_none()) throw std::invalid_argument("cannot add an adapter for the none camera");
  if (rank == 0) throw std::invalid_argument("adapter rank must be positive");
  if (contains(camera)) throw std::invalid_argument("camera " + to_string(camera) + " already has adapters");
  for (const auto& [layer, dims] : layers_) {
    LoraAdapter<T> a;
    a.d = dims.d;
    a.k = dims.k;
    a.rank = std::min(rank, max_rank(dims.d, dims.k));
    a.camera = camera;
    a.A = Tensor<T>({a.rank, a.k});
    a.B = Tensor<T>({a.d, a.rank}, T(0));
    const double sigma = 1.0 / std::sqrt(static_cast<double>(a.rank));
    for (T& v : a.A.values()) v = static_cast<T>(sigma * rng.normal());
    adapters_.emplace(std::make_pair(layer, camera.value), std::move(a));
  }
}

template <typename T>
void AdapterBank<T>::insert(int layer, LoraAdapter<T> adapter) {
  const auto it = layers_.find(layer);
  if (it == layers_.end()) throw std::invalid_argument("adapter for unregistered layer " + std::to_string(layer));
  if (adapter.d != it->second.d || adapter.k != it->second.k)
    throw std::invalid_argument("adapter dims do not match layer " + std::to_string(layer));
  if (adapter.rank == 0 || adapter.rank > max_rank(adapter.d, adapter.k))
    throw std::invalid_argument("adapter rank violates r <= min(d, k) / 2");
  if (adapter.A.shape() != Shape{adapter.rank, adapter.k} || adapter.B.shape() != Shape{adapter.d, adapter.rank})
    throw std::invalid_argument("adapter matrix shapes are inconsistent");
  const auto key = std::make_pair(layer, adapter.camera.value);
  if (adapters_.count(key)) throw std::invalid_argument("duplicate adapter for layer/camera");
  adapters_.emplace(key, std::move(adapter));
}

template <typename T>
bool AdapterBank<T>::contains(CameraLabel camera) const {
  return std::any_of(adapters_.begin(), adapters_.end(),
                     [&](const auto& kv) { return kv.first.second == camera.value; });
}

template <typename T>
bool AdapterBank<T>::contains(int layer, CameraLabel camera) const {
  return adapters_.count({layer, camera.value}) != 0;
}

template <typename T>
LoraAdapter<T>& AdapterBank<T>::adapter(int layer, CameraLabel camera) {
  auto it = adapters_.find({layer, camera.value});
  if (it == adapters_.end()) throw UnknownCameraError(camera);
  return it->second;
}

template <typename T>
const LoraAdapter<T>& AdapterBank<T>::adapter(int layer, CameraLabel camera) const {
  auto it = adapters_.find({layer, camera.value});
  if (it == adapters_.end()) throw UnknownCameraError(camera);
  return it->second;
}

template <typename T>
std::vector<CameraLabel> AdapterBank<T>::cameras() const {
  std::set<int> ids;
  for (const auto& kv : adapters_) ids.insert(kv.first.second);
  std::vector<CameraLabel> out;
  for (int id : ids) out.emplace_back(id);
  return out;
}

template <typename T>
Tensor<T> AdapterBank<T>::effective_weight(std::span<const T> base, int layer, CameraLabel camera) const {
  const auto lit = layers_.find(layer);
  if (lit == layers_.end()) throw std::invalid_argument("unregistered adapter layer " + std::to_string(layer));
  const auto [d, k] = lit->second;
  if (base.size() != d * k) throw std::invalid_argument("base weight size does not match layer dims");
  Tensor<T> w({d, k}, std::vector<T>(base.begin(), base.end()));
  if (camera.is_none()) return w;
  const auto& a = adapter(layer, camera);
  const Tensor<T> delta = a.delta();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] += delta[i];
  return w;
}

template <typename T>
std::size_t AdapterBank<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& kv : adapters_) n += kv.second.param_count();
  return n;
}

template <typename T>
std::size_t AdapterBank<T>::param_count(CameraLabel camera) const {
  std::size_t n = 0;
  for (const auto& kv : adapters_)
    if (kv.first.second == camera.value) n += kv.second.param_count();
  return n;
}

template <typename T>
template <typename U>
AdapterBank<U> AdapterBank<T>::cast() const {
  AdapterBank<U> out;
  for (const auto& [layer, dims] : layers_) out.register_layer(layer, dims.d, dims.k);
  for (const auto& [key, a] : adapters_) {
    LoraAdapter<U> b;
    b.d = a.d;
    b.k = a.k;
    b.rank = a.rank;
    b.camera = a.camera;
    b.A = a.A.template cast<U>();
    b.B = a.B.template cast<U>();
    out.insert(key.first, std::move(b));
  }
  return out;
}

bool TrainableSet::allows(int layer, CameraLabel camera) const {
  return std::find(adapters.begin(), adapters.end(), std::make_pair(layer, camera)) != adapters.end();
}

template <typename T>
TrainableSet route_gradients(const AdapterBank<T>& bank, std::span<const CameraLabel> batch_labels, TrainMode mode,
                             int single_layer) {
  if (batch_labels.empty()) throw std::invalid_argument("route_gradients: empty batch");
  const CameraLabel camera = batch_labels.front();
  for (CameraLabel c : batch_labels)
    if (c != camera) throw std::invalid_argument("mixed-camera batch; one camera label per batch");

  TrainableSet set;
  set.base = mode == TrainMode::combined;
  if (camera.is_none()) {
    if (mode != TrainMode::combined) throw std::invalid_argument("few-shot training needs a camera label");
    return set;
  }
  if (!bank.contains(camera)) throw UnknownCameraError(camera);
  if (mode == TrainMode::few_shot_single_layer) {
    if (!bank.contains(single_layer, camera))
      throw std::invalid_argument("no adapter on layer " + std::to_string(single_layer));
    set.adapters.emplace_back(single_layer, camera);
    return set;
  }
  for (const auto& [layer, dims] : bank.layers())
    if (bank.contains(layer, camera)) set.adapters.emplace_back(layer, camera);
  return set;
}

template struct LoraAdapter<float>;
template struct LoraAdapter<double>;
template class AdapterBank<float>;
template class AdapterBank<double>;
template AdapterBank<double> AdapterBank<float>::cast<double>() const;
template AdapterBank<float> AdapterBank<double>::cast<float>() const;
template AdapterBank<float> AdapterBank<float>::cast<float>() const;
template TrainableSet route_gradients<float>(const AdapterBank<float>&, std::span<const CameraLabel>, TrainMode, int);
template TrainableSet route_gradients<double>(const AdapterBank<double>&, std::span<const CameraLabel>, TrainMode,
                                              int);

}  // namespace rawshift
