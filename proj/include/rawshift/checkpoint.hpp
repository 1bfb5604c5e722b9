// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint directory layout:
//   meta.json        schedule, architecture, step, seed, adapter rank
//   base.sptr        flat denoiser parameter vector (f32)
//   adapters.json    index of (layer, camera, rank, d, k, A file, B file)
//   adapters/*.sptr  A [rank, k] and B [d, rank] per entry

#pragma once

#include <cstdint>
#include <filesystem>

#include "rawshift/camlora.hpp"
#include "rawshift/model.hpp"
#include "rawshift/schedule.hpp"

namespace rawshift {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TinyDenoiser<float> model;
  AdapterBank<float> bank;
  Schedule schedule = make_schedule(ScheduleConfig{});
  std::size_t step = 0;
  std::uint64_t seed = 0;
  std::size_t lora_rank = 4;
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);

/// Throws FormatError on missing or inconsistent files.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace rawshift
