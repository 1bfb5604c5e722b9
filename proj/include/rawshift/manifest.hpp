// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <vector>

#include "rawshift/image.hpp"
#include "rawshift/types.hpp"

namespace rawshift {

/// One paired sample. raw_path holds a [1, 2H, 2W] sensor-unit mosaic,
/// rgb_path a [3, 2H, 2W] display image in [0, 1].
struct ManifestEntry {
  CameraLabel camera;
  std::filesystem::path raw_path;
  std::filesystem::path rgb_path;
  double black_level = 0.0;
  double white_level = 1.0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

/// Relative paths in the document are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);

/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct LoadedPair {
  RawImage raw;
  RgbImage rgb;
};

LoadedPair load_pair(const ManifestEntry& entry);

}  // namespace rawshift
