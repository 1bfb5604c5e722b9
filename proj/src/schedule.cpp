// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace rawshift {

Schedule::Schedule(std::vector<double> eta, double kappa, double bias)
    : eta_(std::move(eta)), kappa_(kappa), bias_(bias) {
  if (eta_.size() < 2) throw std::invalid_argument("schedule needs at least one step");
  if (eta_.front() != 0.0) throw std::invalid_argument("schedule requires eta_0 = 0");
  for (std::size_t t = 1; t < eta_.size(); ++t)
    if (!(eta_[t] > eta_[t - 1])) throw std::invalid_argument("eta must be strictly increasing");
  if (!(eta_.back() >= 0.999 && eta_.back() <= 1.0))
    throw std::invalid_argument("eta_T must lie in [0.999, 1]");
  if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) throw std::invalid_argument("kappa must be positive");
  if (!(bias_ > 0.0 && bias_ <= 1.0)) throw std::invalid_argument("bias must lie in (0, 1]");
}

double Schedule::alpha(int t) const {
  if (t < 1 || t > steps()) throw std::out_of_range("alpha: timestep out of range");
  return eta_[static_cast<std::size_t>(t)] - eta_[static_cast<std::size_t>(t) - 1];
}

nlohmann::json Schedule::to_json() const {
  return {{"T", steps()}, {"eta", eta_}, {"kappa", kappa_}, {"bias", bias_}};
}

Schedule Schedule::from_json(const nlohmann::json& j) {
  Schedule s(j.at("eta").get<std::vector<double>>(), j.at("kappa").get<double>(), j.at("bias").get<double>());
  if (j.contains("T") && j.at("T").get<int>() != s.steps())
    throw std::invalid_argument("schedule T disagrees with eta length");
  return s;
}

Schedule make_schedule(const ScheduleConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(cfg.kappa > 0.0)) throw std::invalid_argument("make_schedule: kappa must be positive");
  if (!(cfg.bias > 0.0 && cfg.bias <= 1.0)) throw std::invalid_argument("make_schedule: bias must lie in (0, 1]");
  if (!(cfg.eta_first > 0.0 && cfg.eta_first <= cfg.eta_last))
    throw std::invalid_argument("make_schedule: need 0 < eta_1 <= eta_T");

  std::vector<double> eta(static_cast<std::size_t>(cfg.steps) + 1, 0.0);
  if (cfg.steps == 1) {
    eta[1] = cfg.eta_last;
  } else {
    const double ratio = cfg.eta_last / cfg.eta_first;
    for (int t = 1; t <= cfg.steps; ++t)
      eta[static_cast<std::size_t>(t)] =
          cfg.eta_first * std::pow(ratio, static_cast<double>(t - 1) / (cfg.steps - 1));
    eta.back() = cfg.eta_last;  // exact endpoint
  }
  return Schedule(std::move(eta), cfg.kappa, cfg.bias);
}

Schedule make_schedule(int steps, double kappa, double bias) {
  ScheduleConfig cfg;
  cfg.steps = steps;
  cfg.kappa = kappa;
  cfg.bias = bias;
  return make_schedule(cfg);
}

template <typename T>
WeightMap<T> weight_map(const Tensor<T>& x0, const Tensor<T>& e0, const Schedule& sched, int t) {
  require_same_shape(x0, e0, "weight_map");
  if (t < 0 || t > sched.steps()) throw std::out_of_range("weight_map: timestep out of range");
  const T eta = static_cast<T>(sched.eta(t));
  const T b = static_cast<T>(sched.bias());
  WeightMap<T> m{Tensor<T>(x0.shape()), Tensor<T>(x0.shape()), t};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    m.w[i] = x0[i] + eta * e0[i];
    m.w_hat[i] = biased_weight(m.w[i], b);
  }
  return m;
}

template WeightMap<float> weight_map<float>(const Tensor<float>&, const Tensor<float>&, const Schedule&, int);
template WeightMap<double> weight_map<double>(const Tensor<double>&, const Tensor<double>&, const Schedule&, int);

}  // namespace rawshift
