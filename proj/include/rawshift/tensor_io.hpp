// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "rawshift/tensor.hpp"
#include "rawshift/types.hpp"

namespace rawshift {

// Tensor file layout (all integers little-endian):
//   "SPTR" | u32 version (1) | u8 dtype (1 = f32, 2 = f64) | u8 ndim (1..4)
//   | ndim x u64 dims | row-major payload
inline constexpr std::uint32_t kTensorFileVersion = 1;

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

struct TensorHeader {
  DType dtype;
  Shape shape;
};

template <typename T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t);

/// Reads a tensor, converting from the stored dtype when it differs from T.
/// Throws FormatError on bad magic, version mismatch, truncated or oversized
/// payload, or dimension overflow.
template <typename T>
Tensor<T> read_tensor(const std::filesystem::path& path);

TensorHeader read_tensor_header(const std::filesystem::path& path);

}  // namespace rawshift
