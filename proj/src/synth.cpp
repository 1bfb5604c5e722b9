// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "rawshift/tensor_io.hpp"

namespace rawshift {
namespace {

// RGB channel sensed at mosaic site (y, x) for the RGGB phase.
constexpr std::size_t bayer_color(std::size_t y, std::size_t x) {
  return (y % 2 == 0) ? (x % 2 == 0 ? 0 : 1) : (x % 2 == 0 ? 1 : 2);
}

// Sum of random Gaussian bumps plus a linear ramp, rescaled to [0, 1].
std::vector<double> smooth_field(std::size_t n, std::size_t bumps, Rng& rng) {
  std::vector<double> f(n * n, 0.0);
  const double gx = rng.uniform(-1, 1), gy = rng.uniform(-1, 1);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) f[y * n + x] = 0.5 * (gx * x + gy * y) / static_cast<double>(n);
  for (std::size_t k = 0; k < bumps; ++k) {
    const double cx = rng.uniform(0, n), cy = rng.uniform(0, n);
    const double s = rng.uniform(0.06, 0.35) * n;
    const double a = rng.uniform(-1, 1);
    const double inv = 1.0 / (2 * s * s);
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const double dx = x - cx, dy = y - cy;
        f[y * n + x] += a * std::exp(-(dx * dx + dy * dy) * inv);
      }
  }
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  const double mn = *lo, span = std::max(*hi - *lo, 1e-12);
  for (double& v : f) v = (v - mn) / span;
  return f;
}

double quantize(double v, int bits) {
  if (bits <= 0) return v;
  const double levels = std::ldexp(1.0, bits) - 1.0;
  return std::round(v * levels) / levels;
}

}  // namespace

void SyntheticCamera::validate() const {
  for (double g : wb_gains)
    if (!(g > 0)) throw std::invalid_argument("camera: white-balance gains must be positive");
  if (!(digital_gain > 0)) throw std::invalid_argument("camera: digital gain must be positive");
  if (!(gamma > 0.3 && gamma <= 1.0)) throw std::invalid_argument("camera: gamma must lie in (0.3, 1]");
  if (quant_bits < 0 || quant_bits > 24) throw std::invalid_argument("camera: quant_bits must be in [0, 24]");
  if (shot_noise < 0 || read_noise < 0) throw std::invalid_argument("camera: noise levels must be nonnegative");
  if (!(white_level > black_level)) throw std::invalid_argument("camera: white level must exceed black level");
}

nlohmann::json SyntheticCamera::to_json() const {
  return {{"wb_gains", wb_gains},         {"digital_gain", digital_gain}, {"gamma", gamma},
          {"quant_bits", quant_bits},     {"shot_noise", shot_noise},     {"read_noise", read_noise},
          {"black_level", black_level},   {"white_level", white_level},   {"integer_adc", integer_adc}};
}

SyntheticCamera SyntheticCamera::from_json(const nlohmann::json& j) {
  SyntheticCamera c;
  c.wb_gains = j.value("wb_gains", c.wb_gains);
  c.digital_gain = j.value("digital_gain", c.digital_gain);
  c.gamma = j.value("gamma", c.gamma);
  c.quant_bits = j.value("quant_bits", c.quant_bits);
  c.shot_noise = j.value("shot_noise", c.shot_noise);
  c.read_noise = j.value("read_noise", c.read_noise);
  c.black_level = j.value("black_level", c.black_level);
  c.white_level = j.value("white_level", c.white_level);
  c.integer_adc = j.value("integer_adc", c.integer_adc);
  c.validate();
  return c;
}

SyntheticCamera SyntheticCamera::identity() { return SyntheticCamera{}; }

SyntheticCamera SyntheticCamera::gamma_gain(double gamma, double gain) {
  SyntheticCamera c;
  c.gamma = gamma;
  c.digital_gain = gain;
  c.quant_bits = 8;
  c.shot_noise = 2e-4;
  c.read_noise = 1e-3;
  c.black_level = 64;
  c.white_level = 1023;
  c.integer_adc = true;
  return c;
}

SyntheticCamera SyntheticCamera::preset(std::size_t index) {
  SyntheticCamera c;
  switch (index % 3) {
    case 0:
      c = gamma_gain(0.45, 1.8);
      break;
    case 1:
      c = gamma_gain(0.7, 1.2);
      c.wb_gains = {1.8, 1.0, 1.4};
      break;
    default:
      c = gamma_gain(0.55, 1.5);
      c.wb_gains = {1.3, 1.0, 1.9};
      break;
  }
  return c;
}

Tensor<float> generate_scene(std::size_t size, Rng& rng, const SceneOptions& opts) {
  if (size == 0) throw std::invalid_argument("generate_scene: empty size");
  const std::size_t n = size;
  const std::vector<double> lum = smooth_field(n, 8, rng);
  const double lo = rng.uniform(0.0, 0.08), hi = rng.uniform(0.35, 1.0);
  Tensor<float> out({3, n, n});
  for (std::size_t c = 0; c < 3; ++c) {
    const std::vector<double> chroma = smooth_field(n, 3, rng);
    const double tint = rng.uniform(0.6, 1.0);
    for (std::size_t i = 0; i < n * n; ++i) {
      const double l = lo + (hi - lo) * lum[i];
      out.plane(c)[i] = static_cast<float>(std::max(opts.floor, l * tint * (0.75 + 0.5 * chroma[i])));
    }
  }
  // Flat patches give the scene hard edges.
  const int patches = rng.uniform_int(1, 3);
  for (int p = 0; p < patches; ++p) {
    const std::size_t w = static_cast<std::size_t>(rng.uniform(0.1, 0.35) * n) + 1;
    const std::size_t h = static_cast<std::size_t>(rng.uniform(0.1, 0.35) * n) + 1;
    const std::size_t x0 = static_cast<std::size_t>(rng.uniform(0, n - std::min(w, n)));
    const std::size_t y0 = static_cast<std::size_t>(rng.uniform(0, n - std::min(h, n)));
    std::array<double, 3> col{};
    for (double& v : col) v = std::max(opts.floor, rng.uniform(0.0, hi));
    for (std::size_t y = y0; y < std::min(n, y0 + h); ++y)
      for (std::size_t x = x0; x < std::min(n, x0 + w); ++x)
        for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = static_cast<float>(col[c]);
  }
  if (rng.uniform() < opts.highlight_probability) {
    const int spots = rng.uniform_int(1, 3);
    for (int s = 0; s < spots; ++s) {
      const double cx = rng.uniform(0, n), cy = rng.uniform(0, n);
      const double r = rng.uniform(0.05, 0.15) * n;
      const double v = rng.uniform(opts.highlight_min, opts.highlight_max);
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
          const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
          if (dx * dx + dy * dy <= r * r)
            for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = std::max(out.at(c, y, x), static_cast<float>(v));
        }
    }
  }
  return out;
}

double isp_curve(const SyntheticCamera& cam, std::size_t channel, double latent) {
  const double lin = std::clamp(latent, 0.0, 1.0) * cam.digital_gain * cam.wb_gains.at(channel);
  return std::clamp(std::pow(lin, cam.gamma), 0.0, 1.0);
}

RenderedPair render(const SyntheticCamera& cam, const Tensor<float>& latent, Rng& rng) {
  cam.validate();
  if (latent.rank() != 3 || latent.channels() != 3) throw std::invalid_argument("render: latent must be [3, H, W]");
  const std::size_t h = latent.height(), w = latent.width();
  if (h % 2 || w % 2) throw std::invalid_argument("render: latent dims must be even");
  RenderedPair out{Tensor<float>({1, h, w}), Tensor<float>({3, h, w})};
  const double range = cam.white_level - cam.black_level;
  const bool noisy = cam.shot_noise > 0 || cam.read_noise > 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double l = latent.at(bayer_color(y, x), y, x);
      double r = l;
      if (noisy) r += std::sqrt(cam.shot_noise * std::max(l, 0.0) + cam.read_noise * cam.read_noise) * rng.normal();
      double v = cam.black_level + std::clamp(r, 0.0, 1.0) * range;
      if (cam.integer_adc) v = std::round(v);
      out.mosaic.at(0, y, x) = static_cast<float>(v);
    }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < h * w; ++i)
      out.rgb.plane(c)[i] = static_cast<float>(quantize(isp_curve(cam, c, latent.plane(c)[i]), cam.quant_bits));
  return out;
}

Manifest synth_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.cameras.empty()) throw std::invalid_argument("synth: no cameras");
  if (cfg.count < 1) throw std::invalid_argument("synth: count must be >= 1");
  if (cfg.size < 16 || cfg.size % 2) throw std::invalid_argument("synth: size must be even and >= 16");
  for (const auto& cam : cfg.cameras) cam.validate();
  std::filesystem::create_directories(out_dir);
  Manifest m;
  for (std::size_t ci = 0; ci < cfg.cameras.size(); ++ci) {
    const SyntheticCamera& cam = cfg.cameras[ci];
    const int label = cfg.first_label + static_cast<int>(ci);
    for (std::size_t i = 0; i < cfg.count; ++i) {
      const std::uint64_t key = (static_cast<std::uint64_t>(label) << 32) | i;
      Rng scene_rng = Rng::stream(cfg.seed, 2 * key);
      Rng noise_rng = Rng::stream(cfg.seed, 2 * key + 1);
      const RenderedPair pair = render(cam, generate_scene(cfg.size, scene_rng, cfg.scene), noise_rng);
      char stem[64];
      std::snprintf(stem, sizeof stem, "cam%d_%05zu", label, i);
      ManifestEntry e;
      e.camera = CameraLabel{label};
      e.raw_path = out_dir / (std::string(stem) + "_raw.sptr");
      e.rgb_path = out_dir / (std::string(stem) + "_rgb.sptr");
      e.black_level = cam.black_level;
      e.white_level = cam.white_level;
      write_tensor(e.raw_path, pair.mosaic);
      write_tensor(e.rgb_path, pair.rgb);
      m.entries.push_back(std::move(e));
    }
  }
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace rawshift
