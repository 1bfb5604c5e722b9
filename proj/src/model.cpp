// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/model.hpp"

#include <cmath>
#include <stdexcept>

#include "rawshift/image.hpp"
#include "rawshift/simd/kernels.hpp"

namespace rawshift {
namespace {

template <typename T>
Tensor<T> pad_planes(const Tensor<T>& src, std::size_t pad) {
  if (pad == 0) return src;
  const std::size_t c = src.channels(), h = src.height(), w = src.width();
  Tensor<T> out({c, h + 2 * pad, w + 2 * pad}, T(0));
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y) {
      const T* s = &src.at(ch, y, 0);
      std::copy(s, s + w, &out.at(ch, y + pad, pad));
    }
  return out;
}

// Weight of the convolution that maps output gradients back to inputs:
// swap in/out channels and rotate each kernel by 180 degrees.
template <typename T>
std::vector<T> transpose_flip(const T* w, std::size_t cout, std::size_t cin, std::size_t k) {
  const std::size_t kk = k * k;
  std::vector<T> out(cout * cin * kk);
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t ci = 0; ci < cin; ++ci)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx)
          out[(ci * cout + co) * kk + (k - 1 - ky) * k + (k - 1 - kx)] = w[(co * cin + ci) * kk + ky * k + kx];
  return out;
}

simd::ConvGeometry geometry(const ConvLayer& l, std::size_t h, std::size_t w) {
  return {l.cin, l.cout, h, w, l.kernel};
}

}  // namespace

template <typename T>
void Gradients<T>::zero() {
  std::fill(base.begin(), base.end(), T(0));
  for (auto& [key, g] : adapters) {
    g.first.fill(T(0));
    g.second.fill(T(0));
  }
}

template <typename T>
void Gradients<T>::accumulate(const Gradients& other, T scale) {
  if (base.size() != other.base.size()) throw std::invalid_argument("gradient size mismatch");
  for (std::size_t i = 0; i < base.size(); ++i) base[i] += scale * other.base[i];
  for (const auto& [key, g] : other.adapters) {
    auto it = adapters.find(key);
    if (it == adapters.end())
      it = adapters.emplace(key, std::make_pair(Tensor<T>(g.first.shape()), Tensor<T>(g.second.shape()))).first;
    for (std::size_t i = 0; i < g.first.size(); ++i) it->second.first[i] += scale * g.first[i];
    for (std::size_t i = 0; i < g.second.size(); ++i) it->second.second[i] += scale * g.second[i];
  }
}

template <typename T>
TinyDenoiser<T>::TinyDenoiser(DenoiserArch arch) : arch_(arch) {
  if (arch_.width < 4) throw std::invalid_argument("denoiser width must be >= 4");
  if (arch_.timesteps < 1) throw std::invalid_argument("denoiser needs at least one timestep");
  const std::size_t c = arch_.width;
  const std::size_t specs[kLayers][3] = {
      {kInputChannels, c, 1}, {c, c, 3}, {c, c, 3}, {c, c, 1}, {c, kOutputChannels, 1}};
  std::size_t offset = 0;
  for (const auto& s : specs) {
    ConvLayer l;
    l.cin = s[0];
    l.cout = s[1];
    l.kernel = s[2];
    l.adaptable = l.kernel == 1;
    l.weight_offset = offset;
    offset += l.weight_size();
    l.bias_offset = offset;
    offset += l.cout;
    layers_.push_back(l);
  }
  embedding_base_ = offset;
  offset += kStages * static_cast<std::size_t>(arch_.timesteps) * c;
  params_.assign(offset, T(0));
}

template <typename T>
std::span<const T> TinyDenoiser<T>::layer_weight(std::size_t layer) const {
  const auto& l = layers_.at(layer);
  return {params_.data() + l.weight_offset, l.weight_size()};
}

template <typename T>
std::span<T> TinyDenoiser<T>::layer_weight(std::size_t layer) {
  const auto& l = layers_.at(layer);
  return {params_.data() + l.weight_offset, l.weight_size()};
}

template <typename T>
std::size_t TinyDenoiser<T>::embedding_offset(std::size_t stage, int t) const {
  if (stage >= kStages || t < 1 || t > arch_.timesteps) throw std::out_of_range("embedding index out of range");
  return embedding_base_ + (stage * static_cast<std::size_t>(arch_.timesteps) + static_cast<std::size_t>(t - 1)) *
                               arch_.width;
}

template <typename T>
void TinyDenoiser<T>::init(Rng& rng) {
  std::fill(params_.begin(), params_.end(), T(0));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    const double fan_in = static_cast<double>(l.cin * l.kernel * l.kernel);
    const double sigma = (i + 1 == layers_.size()) ? 0.1 / std::sqrt(fan_in) : std::sqrt(2.0 / fan_in);
    for (std::size_t j = 0; j < l.weight_size(); ++j) params_[l.weight_offset + j] = static_cast<T>(sigma * rng.normal());
  }
}

template <typename T>
void TinyDenoiser<T>::register_adapter_layers(AdapterBank<T>& bank) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].adaptable) bank.register_layer(static_cast<int>(i), layers_[i].cout, layers_[i].cin);
}

template <typename T>
EffectiveWeights<T> TinyDenoiser<T>::effective_weights(const AdapterBank<T>& bank, CameraLabel camera) const {
  EffectiveWeights<T> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].adaptable) continue;
    const int id = static_cast<int>(i);
    if (camera.is_none() || !bank.layers().count(id)) {
      const auto w = layer_weight(i);
      out.emplace(id, Tensor<T>({layers_[i].cout, layers_[i].cin}, std::vector<T>(w.begin(), w.end())));
    } else {
      out.emplace(id, bank.effective_weight(layer_weight(i), id, camera));
    }
  }
  return out;
}

template <typename T>
Tensor<T> TinyDenoiser<T>::forward(const Tensor<T>& x_t, const Tensor<T>& rgb, int t, const AdapterBank<T>& bank,
                                   CameraLabel camera, Cache* cache) const {
  Tensor<T> out = forward(x_t, rgb, t, effective_weights(bank, camera), cache);
  if (cache) cache->camera = camera;
  return out;
}

template <typename T>
Tensor<T> TinyDenoiser<T>::forward(const Tensor<T>& x_t, const Tensor<T>& rgb, int t,
                                   const EffectiveWeights<T>& weights, Cache* cache) const {
  if (x_t.rank() != 3 || x_t.channels() != kOutputChannels)
    throw std::invalid_argument("denoiser: x_t must be [4,H,W], got " + shape_string(x_t.shape()));
  if (rgb.rank() != 3 || rgb.channels() != 3 || rgb.height() != 2 * x_t.height() || rgb.width() != 2 * x_t.width())
    throw std::invalid_argument("denoiser: rgb must be [3,2H,2W] for x_t " + shape_string(x_t.shape()));
  if (t < 1 || t > arch_.timesteps) throw std::out_of_range("denoiser: timestep out of range");

  const std::size_t h = x_t.height(), w = x_t.width(), plane = h * w, c = arch_.width;

  Tensor<T> input({kInputChannels, h, w});
  std::copy(x_t.values().begin(), x_t.values().end(), input.data());
  const Tensor<T> s2d = space_to_depth(rgb);
  std::copy(s2d.values().begin(), s2d.values().end(), input.data() + x_t.size());

  Cache local;
  Cache& k = cache ? *cache : local;
  k.t = t;
  k.height = h;
  k.width = w;
  k.weights = weights;
  k.inputs.assign(kLayers, Tensor<T>());
  k.pre.assign(kStages, Tensor<T>());
  k.deriv.assign(kStages, Tensor<T>());

  Tensor<T> act = std::move(input);
  for (std::size_t i = 0; i < kLayers; ++i) {
    const ConvLayer& l = layers_[i];
    k.inputs[i] = pad_planes(act, (l.kernel - 1) / 2);
    const T* wptr = l.adaptable ? weights.at(static_cast<int>(i)).data() : params_.data() + l.weight_offset;
    Tensor<T> z({l.cout, h, w});
    simd::conv_forward(geometry(l, h, w), k.inputs[i].data(), wptr, params_.data() + l.bias_offset, z.data());

    if (i < kStages) {
      const T* emb = params_.data() + embedding_offset(i, t);
      Tensor<T> scaled({c, h, w});
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T s = T(1) + emb[ch];
        const T* zp = z.data() + ch * plane;
        T* sp = scaled.data() + ch * plane;
        for (std::size_t p = 0; p < plane; ++p) sp[p] = s * zp[p];
      }
      Tensor<T> out({c, h, w}), d({c, h, w});
      simd::squareplus(scaled.data(), out.data(), d.data(), out.size());
      k.pre[i] = std::move(z);
      k.deriv[i] = std::move(d);
      act = std::move(out);
    } else {
      for (T& v : z.values()) v = std::tanh(v);
      act = std::move(z);
    }
  }
  if (cache) k.output = act;
  return act;
}

template <typename T>
Gradients<T> TinyDenoiser<T>::make_gradients() const {
  Gradients<T> g;
  g.base.assign(params_.size(), T(0));
  return g;
}

template <typename T>
void TinyDenoiser<T>::backward(const Cache& cache, const Tensor<T>& grad_output, const AdapterBank<T>& bank,
                               Gradients<T>& grads) const {
  require_same_shape(grad_output, cache.output, "denoiser backward");
  if (grads.base.size() != params_.size()) grads.base.assign(params_.size(), T(0));
  const std::size_t h = cache.height, w = cache.width, plane = h * w, c = arch_.width;

  // Through tanh.
  Tensor<T> g(grad_output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = grad_output[i] * (T(1) - cache.output[i] * cache.output[i]);

  for (std::size_t ii = kLayers; ii-- > 0;) {
    const ConvLayer& l = layers_[ii];
    const auto geom = geometry(l, h, w);

    if (ii < kStages) {
      // g holds dL/d(activation); move it to dL/dz through squareplus and the timestep scale.
      const T* emb = params_.data() + embedding_offset(ii, cache.t);
      T* gemb = grads.base.data() + embedding_offset(ii, cache.t);
      const Tensor<T>& z = cache.pre[ii];
      const Tensor<T>& d = cache.deriv[ii];
      for (std::size_t ch = 0; ch < c; ++ch) {
        const T s = T(1) + emb[ch];
        T acc = 0;
        for (std::size_t p = 0; p < plane; ++p) {
          const std::size_t idx = ch * plane + p;
          const T gs = g[idx] * d[idx];
          acc += gs * z[idx];
          g[idx] = gs * s;
        }
        gemb[ch] += acc;
      }
    }

    const int id = static_cast<int>(ii);
    const Tensor<T>& input = cache.inputs[ii];
    const T* wptr = l.adaptable ? cache.weights.at(id).data() : params_.data() + l.weight_offset;

    std::vector<T> gw(l.weight_size(), T(0));
    simd::conv_weight_grad(geom, input.data(), g.data(), gw.data(), grads.base.data() + l.bias_offset);
    for (std::size_t j = 0; j < gw.size(); ++j) grads.base[l.weight_offset + j] += gw[j];

    if (l.adaptable && !cache.camera.is_none() && bank.contains(id, cache.camera)) {
      const auto& a = bank.adapter(id, cache.camera);
      auto key = std::make_pair(id, cache.camera.value);
      auto it = grads.adapters.find(key);
      if (it == grads.adapters.end())
        it = grads.adapters.emplace(key, std::make_pair(Tensor<T>(a.A.shape()), Tensor<T>(a.B.shape()))).first;
      auto& [ga, gb] = it->second;
      // W_eff = W + B A  =>  dA = B^T dW, dB = dW A^T.
      for (std::size_t i = 0; i < a.d; ++i)
        for (std::size_t q = 0; q < a.rank; ++q) {
          T sb = 0;
          const T bq = a.B[i * a.rank + q];
          for (std::size_t j = 0; j < a.k; ++j) {
            const T gwij = gw[i * a.k + j];
            sb += gwij * a.A[q * a.k + j];
            ga[q * a.k + j] += bq * gwij;
          }
          gb[i * a.rank + q] += sb;
        }
    }

    if (ii == 0) break;  // no gradient needed w.r.t. the network input

    // dL/d(input) via the transposed, flipped convolution over padded g.
    const std::size_t pad = (l.kernel - 1) / 2;
    const Tensor<T> gpad = pad_planes(g, pad);
    const std::vector<T> wt = transpose_flip(wptr, l.cout, l.cin, l.kernel);
    Tensor<T> gin({l.cin, h, w});
    simd::conv_forward(simd::ConvGeometry{l.cout, l.cin, h, w, l.kernel}, gpad.data(), wt.data(),
                       static_cast<const T*>(nullptr), gin.data());
    g = std::move(gin);
  }
}

template <typename T>
template <typename U>
TinyDenoiser<U> TinyDenoiser<T>::cast() const {
  TinyDenoiser<U> out(arch_);
  for (std::size_t i = 0; i < params_.size(); ++i) out.params_[i] = static_cast<U>(params_[i]);
  return out;
}

template struct Gradients<float>;
template struct Gradients<double>;
template class TinyDenoiser<float>;
template class TinyDenoiser<double>;
template TinyDenoiser<double> TinyDenoiser<float>::cast<double>() const;
template TinyDenoiser<float> TinyDenoiser<double>::cast<float>() const;

}  // namespace rawshift
