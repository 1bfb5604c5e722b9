// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rawshift/parallel.hpp"

namespace rawshift {

ResidualAccumulator::ResidualAccumulator(std::size_t bins) : bins_(bins), cells_(kPackedChannels * bins) {
  if (bins < 1) throw std::invalid_argument("residual stats: need at least one bin");
}

void ResidualAccumulator::add(const Tensor<float>& y0_packed, const Tensor<float>& x0) {
  require_same_shape(y0_packed, x0, "residual stats");
  if (y0_packed.rank() != 3 || y0_packed.channels() != kPackedChannels)
    throw std::invalid_argument("residual stats: expected packed [4, H, W] tensors");
  const std::size_t plane = y0_packed.height() * y0_packed.width();
  for (std::size_t c = 0; c < kPackedChannels; ++c)
    for (std::size_t i = 0; i < plane; ++i) {
      const double y = (static_cast<double>(y0_packed.plane(c)[i]) + 1.0) * 0.5;
      const double x = (static_cast<double>(x0.plane(c)[i]) + 1.0) * 0.5;
      const double r = y - x;
      const auto bin = std::min<std::size_t>(bins_ - 1, static_cast<std::size_t>(std::max(0.0, y) * bins_));
      Cell& cell = cells_[c * bins_ + bin];
      ++cell.n;
      cell.sum += r;
      cell.sum_abs += std::abs(r);
      cell.sum_sq += r * r;
    }
}

void ResidualAccumulator::merge(const ResidualAccumulator& other) {
  if (other.bins_ != bins_) throw std::invalid_argument("residual stats: bin count mismatch");
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].n += other.cells_[i].n;
    cells_[i].sum += other.cells_[i].sum;
    cells_[i].sum_abs += other.cells_[i].sum_abs;
    cells_[i].sum_sq += other.cells_[i].sum_sq;
  }
}

std::vector<ResidualCurve> ResidualAccumulator::curves() const {
  std::vector<ResidualCurve> out(kPackedChannels);
  for (std::size_t c = 0; c < kPackedChannels; ++c) {
    ResidualCurve& rc = out[c];
    rc.channel = c;
    for (std::size_t b = 0; b < bins_; ++b) {
      const Cell& cell = cells_[c * bins_ + b];
      rc.bin_center.push_back((static_cast<double>(b) + 0.5) / static_cast<double>(bins_));
      rc.count.push_back(cell.n);
      if (cell.n == 0) {
        rc.mean_abs.push_back(0.0);
        rc.mean.push_back(0.0);
        rc.stddev.push_back(0.0);
        continue;
      }
      const double n = static_cast<double>(cell.n);
      const double mean = cell.sum / n;
      rc.mean_abs.push_back(cell.sum_abs / n);
      rc.mean.push_back(mean);
      rc.stddev.push_back(std::sqrt(std::max(0.0, cell.sum_sq / n - mean * mean)));
    }
  }
  return out;
}

CameraCurves residual_stats(const Manifest& manifest, std::size_t bins, std::size_t workers) {
  if (bins < 8) throw std::invalid_argument("residual stats: bins must be >= 8");
  std::vector<ResidualAccumulator> per_image(manifest.entries.size(), ResidualAccumulator(bins));
  parallel_for(manifest.entries.size(), workers, [&](std::size_t i) {
    const LoadedPair p = load_pair(manifest.entries[i]);
    per_image[i].add(align_rgb(p.rgb).data, p.raw.data());
  });
  std::map<CameraLabel, ResidualAccumulator> acc;
  for (std::size_t i = 0; i < per_image.size(); ++i)
    acc.try_emplace(manifest.entries[i].camera, bins).first->second.merge(per_image[i]);
  CameraCurves out;
  for (const auto& [cam, a] : acc) out.emplace(cam, a.curves());
  return out;
}

void write_residual_csv(std::ostream& out, const std::vector<ResidualCurve>& curves) {
  out << "channel,bin_center,mean_abs_residual,std_residual,count\n";
  out.precision(10);
  for (const ResidualCurve& c : curves)
    for (std::size_t b = 0; b < c.bin_center.size(); ++b)
      out << c.channel << ',' << c.bin_center[b] << ',' << c.mean_abs[b] << ',' << c.stddev[b] << ',' << c.count[b]
          << '\n';
}

void write_residual_csv(const std::filesystem::path& path, const std::vector<ResidualCurve>& curves) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  write_residual_csv(f, curves);
}

double saturation_fraction(const RgbImage& rgb, double threshold) {
  const auto v = rgb.data().values();
  std::size_t hits = 0;
  for (float s : v)
    if ((static_cast<double>(s) + 1.0) * 0.5 >= threshold) ++hits;
  return static_cast<double>(hits) / static_cast<double>(v.size());
}

std::vector<RankedEntry> rank_overexposed(const Manifest& manifest, double fraction, std::size_t workers) {
  if (manifest.entries.empty()) throw std::invalid_argument("select: empty manifest");
  if (!(fraction > 0 && fraction <= 1)) throw std::invalid_argument("select: fraction must lie in (0, 1]");
  const std::size_t n = manifest.entries.size();
  std::vector<double> score(n);
  parallel_for(n, workers, [&](std::size_t i) { score[i] = saturation_fraction(load_pair(manifest.entries[i]).rgb); });
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return manifest.entries[a].rgb_path < manifest.entries[b].rgb_path;
  });
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9)), 1, n);
  std::vector<RankedEntry> out;
  for (std::size_t k = 0; k < keep; ++k) out.push_back({manifest.entries[order[k]], score[order[k]]});
  return out;
}

Manifest select_overexposed(const Manifest& manifest, double fraction, std::size_t workers) {
  Manifest out;
  for (auto& r : rank_overexposed(manifest, fraction, workers)) out.entries.push_back(std::move(r.entry));
  return out;
}

}  // namespace rawshift
