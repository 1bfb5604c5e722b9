// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <stdexcept>
#include <string>

namespace rawshift {

/// Small integer camera id. A negative value means "no camera", which
/// routes through the shared base weights only.
struct CameraLabel {
  int value = -1;

  constexpr CameraLabel() = default;
  constexpr explicit CameraLabel(int v) : value(v) {}

  static constexpr CameraLabel none() { return CameraLabel{}; }
  constexpr bool is_none() const { return value < 0; }

  friend constexpr auto operator<=>(const CameraLabel&, const CameraLabel&) = default;
};

inline std::string to_string(CameraLabel c) {
  return c.is_none() ? std::string("none") : std::to_string(c.value);
}

/// Malformed or unreadable data (tensor files, manifests, checkpoints).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Camera label not present in an adapter bank.
class UnknownCameraError : public std::invalid_argument {
 public:
  explicit UnknownCameraError(CameraLabel c)
      : std::invalid_argument("no adapter registered for camera " + to_string(c)), camera(c) {}
  CameraLabel camera;
};

}  // namespace rawshift
