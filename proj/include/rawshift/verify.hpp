// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

// Statistical and algebraic self-checks of the diffusion kernel, sampler
// and training gradients. Failures are report entries, never exceptions.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rawshift {

enum class Suite { marginal, posterior, degenerate, oracle_sampling, gradient };

const std::vector<Suite>& all_suites();
std::string to_string(Suite s);
/// Throws std::invalid_argument for unknown names.
Suite parse_suite(const std::string& name);

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string comparison;  // how measured is held against tolerance
  bool passed = false;
  std::string detail;
};

struct VerificationReport {
  std::string suite;
  std::uint64_t seed = 0;
  double seconds = 0.0;
  std::vector<CheckResult> checks;

  bool passed() const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// Non-finite doubles become the strings "inf", "-inf", "nan".
nlohmann::json json_number(double v);

VerificationReport verify(Suite suite, std::uint64_t seed = 0);

// Individual suites with their sizes exposed.
VerificationReport verify_marginal(std::uint64_t seed, std::size_t samples = 100000, std::size_t probes = 16);
VerificationReport verify_posterior(std::uint64_t seed, std::size_t configs = 50);
VerificationReport verify_degenerate(std::uint64_t seed, std::size_t elements = 4096);
VerificationReport verify_oracle_sampling(std::uint64_t seed, std::size_t pairs = 10);
VerificationReport verify_gradient(std::uint64_t seed, std::size_t coordinates = 128);

/// Posterior mean and variance of x_{t-1} given (x_t, x0, e0) by direct
/// quadrature of prior x likelihood on a uniform grid.
struct GridPosterior {
  double mean = 0.0;
  double var = 0.0;
  std::size_t points = 0;
};
GridPosterior grid_posterior(double prior_mean, double prior_var, double lik_center, double lik_var);

}  // namespace rawshift
