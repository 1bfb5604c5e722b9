// Copyright 2026 The rawshift Authors
// SPDX-License-Identifier: Apache-2.0

#include "rawshift/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rawshift/gradcheck.hpp"
#include "rawshift/image.hpp"
#include "rawshift/kernel.hpp"
#include "rawshift/sampler.hpp"
#include "rawshift/synth.hpp"

namespace rawshift {
namespace {

using nlohmann::json;

CheckResult at_most(std::string name, double measured, double tol, std::string detail = {}) {
  return {std::move(name), measured, tol, "<=", measured <= tol, std::move(detail)};
}

CheckResult below(std::string name, double measured, double tol, std::string detail = {}) {
  return {std::move(name), measured, tol, "<", measured < tol, std::move(detail)};
}

// Ratio check reported as the worst ratio; tolerance is the allowed |r - 1|.
CheckResult ratio_within(std::string name, double worst_ratio, double tol, std::string detail = {}) {
  return {std::move(name), worst_ratio, tol, "|x-1|<=", std::abs(worst_ratio - 1.0) <= tol, std::move(detail)};
}

CheckResult exact(std::string name, double mismatch, std::string detail = {}) {
  return {std::move(name), mismatch, 0.0, "==", mismatch == 0.0, std::move(detail)};
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Per-row sample statistics of a [rows, n] view of a tensor.
struct Moments {
  std::vector<double> mean, var;
};

Moments row_moments(const Tensor<double>& x, std::size_t rows) {
  const std::size_t n = x.size() / rows;
  Moments m{std::vector<double>(rows), std::vector<double>(rows)};
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0, ss = 0;
    const double* p = x.data() + r * n;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    const double mean = s / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) ss += (p[i] - mean) * (p[i] - mean);
    m.mean[r] = mean;
    m.var[r] = ss / static_cast<double>(n - 1);
  }
  return m;
}

double worst_ratio(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 1.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double r = a[i] / b[i];
    if (std::abs(r - 1.0) > std::abs(worst - 1.0)) worst = r;
  }
  return worst;
}

}  // namespace

const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> s{Suite::marginal, Suite::posterior, Suite::degenerate, Suite::oracle_sampling,
                                    Suite::gradient};
  return s;
}

std::string to_string(Suite s) {
  switch (s) {
    case Suite::marginal: return "marginal";
    case Suite::posterior: return "posterior";
    case Suite::degenerate: return "degenerate";
    case Suite::oracle_sampling: return "oracle_sampling";
    case Suite::gradient: return "gradient";
  }
  return "?";
}

Suite parse_suite(const std::string& name) {
  for (Suite s : all_suites())
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown verification suite '" + name + "'");
}

bool VerificationReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json VerificationReport::to_json() const {
  json cs = json::array();
  for (const auto& c : checks)
    cs.push_back({{"name", c.name},
                  {"measured", json_number(c.measured)},
                  {"tolerance", json_number(c.tolerance)},
                  {"comparison", c.comparison},
                  {"passed", c.passed},
                  {"detail", c.detail}});
  return {{"suite", suite}, {"seed", seed}, {"passed", passed()}, {"seconds", seconds}, {"checks", cs}};
}

std::string VerificationReport::to_text() const {
  std::ostringstream s;
  s << "suite " << suite << " (seed " << seed << "): " << (passed() ? "PASS" : "FAIL") << ", " << checks.size()
    << " checks, " << std::fixed << std::setprecision(2) << seconds << " s\n";
  s.unsetf(std::ios::fixed);
  for (const auto& c : checks) {
    s << "  " << (c.passed ? "ok  " : "FAIL") << "  " << c.name << ": " << std::setprecision(6) << c.measured << ' '
      << c.comparison << ' ' << c.tolerance;
    if (!c.detail.empty()) s << "  [" << c.detail << "]";
    s << '\n';
  }
  return s.str();
}

GridPosterior grid_posterior(double prior_mean, double prior_var, double lik_center, double lik_var) {
  const double sp = std::sqrt(prior_var), sl = std::sqrt(lik_var);
  constexpr double kSpan = 14.0;
  const double lo = std::max(prior_mean - kSpan * sp, lik_center - kSpan * sl);
  const double hi = std::min(prior_mean + kSpan * sp, lik_center + kSpan * sl);
  if (!(hi > lo)) throw std::runtime_error("grid posterior: prior and likelihood do not overlap");
  const double h = std::min(sp, sl) / 300.0;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h)) + 1;
  std::vector<double> x(n), logw(n);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = lo + static_cast<double>(i) * h;
    const double dp = x[i] - prior_mean, dl = x[i] - lik_center;
    logw[i] = -0.5 * dp * dp / prior_var - 0.5 * dl * dl / lik_var;
    peak = std::max(peak, logw[i]);
  }
  double z = 0, m1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = std::exp(logw[i] - peak);
    z += logw[i];
    m1 += logw[i] * x[i];
  }
  const double mean = m1 / z;
  double m2 = 0;
  for (std::size_t i = 0; i < n; ++i) m2 += logw[i] * (x[i] - mean) * (x[i] - mean);
  return {mean, m2 / z, n};
}

VerificationReport verify_marginal(std::uint64_t seed, std::size_t samples, std::size_t probes) {
  Timer timer;
  VerificationReport rep{"marginal", seed, 0.0, {}};
  const Schedule sched = make_schedule(ScheduleConfig{});
  const int T = sched.steps();
  const double b = sched.bias();
  Rng rng = Rng::stream(seed, 0);

  // Probe pixels whose eta_t * w_hat_t^2 never decreases, so no step variance
  // is clamped and the chained process is exactly the model's.
  std::vector<double> px0, pe0;
  while (px0.size() < probes) {
    const double x0 = rng.uniform(-1, 1), y0 = rng.uniform(-1, 1), e0 = y0 - x0;
    bool ok = true;
    for (int t = 1; t <= T; ++t) {
      const double hp = biased_weight(x0 + sched.eta(t - 1) * e0, b), ht = biased_weight(x0 + sched.eta(t) * e0, b);
      ok = ok && sched.eta(t) * ht * ht > sched.eta(t - 1) * hp * hp;
    }
    if (!ok) continue;
    px0.push_back(x0);
    pe0.push_back(e0);
  }
  Tensor<double> x0({probes, samples}), e0({probes, samples});
  for (std::size_t p = 0; p < probes; ++p)
    for (std::size_t i = 0; i < samples; ++i) {
      x0[p * samples + i] = px0[p];
      e0[p * samples + i] = pe0[p];
    }

  NoisyState<double> chain{x0, 0};
  std::size_t clamped = 0;
  const double n = static_cast<double>(samples);
  for (int t = 1; t <= T; ++t) {
    StepSample<double> s = forward_step_sample(chain, x0, e0, sched, rng);
    clamped += s.clamped;
    chain = std::move(s.state);
    const NoisyState<double> direct = forward_marginal_sample(x0, e0, sched, t, rng);
    const Moments mc = row_moments(chain.x, probes), md = row_moments(direct.x, probes);

    double worst_z = 0, worst_z_formula = 0;
    std::vector<double> var_formula(probes);
    for (std::size_t p = 0; p < probes; ++p) {
      const double se = std::sqrt(mc.var[p] / n + md.var[p] / n);
      worst_z = std::max(worst_z, std::abs(mc.mean[p] - md.mean[p]) / se);
      const double w_hat = biased_weight(px0[p] + sched.eta(t) * pe0[p], b);
      var_formula[p] = sched.kappa() * sched.kappa() * sched.eta(t) * w_hat * w_hat;
      const double expected_mean = px0[p] + sched.eta(t) * pe0[p];
      worst_z_formula = std::max(worst_z_formula, std::abs(md.mean[p] - expected_mean) / std::sqrt(var_formula[p] / n));
    }
    const std::string ts = "t=" + std::to_string(t);
    rep.checks.push_back(at_most("chained vs marginal mean, " + ts, worst_z, 3.0, "max standard errors over probes"));
    rep.checks.push_back(ratio_within("chained vs marginal variance ratio, " + ts, worst_ratio(mc.var, md.var), 0.02,
                                      "worst ratio over probes"));
    rep.checks.push_back(
        at_most("marginal mean vs closed form, " + ts, worst_z_formula, 3.0, "max standard errors over probes"));
    rep.checks.push_back(ratio_within("marginal variance vs closed form, " + ts, worst_ratio(md.var, var_formula),
                                      0.02, "worst ratio over probes"));
  }
  rep.checks.push_back(exact("clamped step variances on probes", static_cast<double>(clamped)));

  // x_T initialisation: variance kappa^2 eta_T w_hat_T^2 with w_hat_T from y0.
  Tensor<float> y0f({probes, samples});
  for (std::size_t p = 0; p < probes; ++p)
    for (std::size_t i = 0; i < samples; ++i) y0f[p * samples + i] = static_cast<float>(px0[p] + pe0[p]);
  const Tensor<double> xT = init_xT(y0f, sched, rng).x.cast<double>();
  const Moments mi = row_moments(xT, probes);
  std::vector<double> var_init(probes);
  for (std::size_t p = 0; p < probes; ++p) {
    const double w_hat = biased_weight(static_cast<double>(y0f[p * samples]), b);
    var_init[p] = sched.kappa() * sched.kappa() * sched.eta(T) * w_hat * w_hat;
  }
  rep.checks.push_back(ratio_within("x_T init variance vs closed form", worst_ratio(mi.var, var_init), 0.02,
                                    "worst ratio over probes"));
  rep.seconds = timer.seconds();
  return rep;
}

VerificationReport verify_posterior(std::uint64_t seed, std::size_t configs) {
  Timer timer;
  VerificationReport rep{"posterior", seed, 0.0, {}};
  Rng rng = Rng::stream(seed, 1);
  const ScheduleConfig base{};
  double worst_mean = 0, worst_var = 0, worst_t1 = 0;
  std::string worst_mean_at, worst_var_at;
  std::size_t done = 0, rejected = 0;
  while (done < configs) {
    const double kappa = rng.uniform(0.5, 4.0), b = rng.uniform(0.05, 0.5);
    const Schedule sched = make_schedule(ScheduleConfig{base.steps, kappa, b, base.eta_first, base.eta_last});
    const double x0 = rng.uniform(-1, 1), y0 = rng.uniform(-1, 1), e0 = y0 - x0;
    const int t = rng.uniform_int(2, sched.steps());
    const double hp = biased_weight(x0 + sched.eta(t - 1) * e0, b), ht = biased_weight(x0 + sched.eta(t) * e0, b);
    const double prior_var = kappa * kappa * sched.eta(t - 1) * hp * hp;
    const double lik_var = kappa * kappa * (sched.eta(t) * ht * ht - sched.eta(t - 1) * hp * hp);
    if (!(lik_var > 0)) {  // no forward step density to integrate
      ++rejected;
      continue;
    }
    const double xt = x0 + sched.eta(t) * e0 + kappa * std::sqrt(sched.eta(t)) * ht * rng.normal();
    const GridPosterior g = grid_posterior(x0 + sched.eta(t - 1) * e0, prior_var, xt - sched.alpha(t) * e0, lik_var);
    const ScalarPosterior c = posterior_scalar(xt, x0, e0, sched, t);
    const double scale = std::max(std::abs(c.mu), std::sqrt(c.sigma2));
    const double em = std::abs(g.mean - c.mu) / scale, ev = std::abs(g.var - c.sigma2) / c.sigma2;
    const std::string where = "config " + std::to_string(done) + " t=" + std::to_string(t);
    if (em > worst_mean) worst_mean = em, worst_mean_at = where;
    if (ev > worst_var) worst_var = ev, worst_var_at = where;
    // t = 1 collapses to x0 exactly.
    const ScalarPosterior c1 = posterior_scalar(xt, x0, e0, sched, 1);
    worst_t1 = std::max({worst_t1, std::abs(c1.mu - x0), std::abs(c1.sigma2), std::abs(c1.gamma)});
    ++done;
  }
  const std::string note = std::to_string(rejected) + " configs without positive step variance redrawn";
  rep.checks.push_back(below("posterior mean vs grid quadrature (relative)", worst_mean, 1e-6, worst_mean_at));
  rep.checks.push_back(below("posterior variance vs grid quadrature (relative)", worst_var, 1e-6, worst_var_at));
  rep.checks.push_back(exact("t=1 posterior is x0 with zero variance", worst_t1, note));
  rep.seconds = timer.seconds();
  return rep;
}

VerificationReport verify_degenerate(std::uint64_t seed, std::size_t elements) {
  Timer timer;
  VerificationReport rep{"degenerate", seed, 0.0, {}};
  Rng rng = Rng::stream(seed, 2);
  double worst_gamma = 0, worst_mu = 0, worst_s2 = 0, worst_marg = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const double kappa = rng.uniform(0.5, 4.0);
    const Schedule sched = make_schedule(4, kappa, 1.0);
    Tensor<double> x0({elements}), e0({elements}), xt({elements}), eps({elements});
    for (std::size_t i = 0; i < elements; ++i) {
      x0[i] = rng.uniform(-1, 1);
      e0[i] = rng.uniform(-1, 1) - x0[i];
      xt[i] = rng.uniform(-3, 3);
      eps[i] = rng.normal();
    }
    for (int t = 1; t <= sched.steps(); ++t) {
      const double eta = sched.eta(t), eta_prev = sched.eta(t - 1), alpha = sched.alpha(t);
      const PosteriorParams<double> p = posterior_params(NoisyState<double>{xt, t}, x0, e0, sched);
      const Tensor<double> m = forward_marginal_from_noise(x0, e0, sched, t, eps);
      for (std::size_t i = 0; i < elements; ++i) {
        worst_gamma = std::max(worst_gamma, std::abs(p.gamma[i] - eta_prev / eta));
        worst_mu = std::max(worst_mu, std::abs(p.mu[i] - ((eta_prev / eta) * xt[i] + (alpha / eta) * x0[i])));
        worst_s2 = std::max(worst_s2, std::abs(p.sigma2[i] - kappa * kappa * (eta_prev / eta) * alpha));
        worst_marg =
            std::max(worst_marg, std::abs(m[i] - (x0[i] + eta * e0[i] + kappa * std::sqrt(eta) * eps[i])));
      }
    }
  }
  rep.checks.push_back(at_most("gamma = eta_{t-1}/eta_t", worst_gamma, 1e-12));
  rep.checks.push_back(at_most("mu = (eta_{t-1}/eta_t) x_t + (alpha_t/eta_t) x0", worst_mu, 1e-12));
  rep.checks.push_back(at_most("sigma2 = kappa^2 (eta_{t-1}/eta_t) alpha_t", worst_s2, 1e-12));
  rep.checks.push_back(at_most("marginal = x0 + eta_t e0 + kappa sqrt(eta_t) eps", worst_marg, 1e-12));
  rep.seconds = timer.seconds();
  return rep;
}

VerificationReport verify_oracle_sampling(std::uint64_t seed, std::size_t pairs) {
  Timer timer;
  VerificationReport rep{"oracle_sampling", seed, 0.0, {}};
  Rng rng = Rng::stream(seed, 3);
  const SyntheticCamera cam = SyntheticCamera::preset(0);
  const Schedule s4 = make_schedule(4), s1 = make_schedule(1);
  double worst = 0, worst_t1 = 0, worst_identity = 0;
  bool trajectory_ok = true;
  for (std::size_t k = 0; k < pairs; ++k) {
    const RenderedPair rp = render(cam, generate_scene(32, rng), rng);
    const RawImage raw = normalize_raw(pack_bayer(rp.mosaic), cam.black_level, cam.white_level);
    const RgbImage rgb = RgbImage::from_unit(rp.rgb);
    const OracleDenoiser oracle(raw.data());
    SamplerConfig c4{s4, rng.next_u64(), k, true};
    const SampleResult r4 = sample(rgb, CameraLabel::none(), oracle, c4);
    SamplerConfig c1{s1, c4.seed, k, false};
    const SampleResult r1 = sample(rgb, CameraLabel::none(), oracle, c1);
    for (std::size_t i = 0; i < raw.data().size(); ++i) {
      worst = std::max(worst, static_cast<double>(std::abs(r4.x0[i] - raw.data()[i])));
      worst_t1 = std::max(worst_t1, static_cast<double>(std::abs(r4.x0[i] - r1.x0[i])));
    }
    trajectory_ok = trajectory_ok && r4.trajectory.size() == 5;
    for (std::size_t j = 1; j < r4.trajectory.size(); ++j)
      trajectory_ok = trajectory_ok && r4.trajectory[j].t == r4.trajectory[j - 1].t - 1;

    const SampleResult ri = sample(rgb, CameraLabel::none(), IdentityDenoiser{}, c4);
    const Tensor<float> y0 = align_rgb(rgb).data;
    for (std::size_t i = 0; i < y0.size(); ++i)
      worst_identity = std::max(worst_identity, static_cast<double>(std::abs(ri.x0[i] - y0[i])));
  }
  rep.checks.push_back(at_most("oracle denoiser reproduces x0 (max abs)", worst, 1e-6,
                               std::to_string(pairs) + " synthetic pairs"));
  rep.checks.push_back(exact("T=4 and T=1 oracle samples agree", worst_t1));
  rep.checks.push_back(exact("identity denoiser returns aligned y0", worst_identity));
  rep.checks.push_back(exact("trajectory has T+1 states with decreasing t", trajectory_ok ? 0.0 : 1.0));
  rep.seconds = timer.seconds();
  return rep;
}

VerificationReport verify_gradient(std::uint64_t seed, std::size_t coordinates) {
  Timer timer;
  VerificationReport rep{"gradient", seed, 0.0, {}};
  Rng rng = Rng::stream(seed, 4);
  TinyDenoiser<double> model(DenoiserArch{});
  model.init(rng);
  // Move biases and timestep embeddings off zero so every path is exercised.
  for (double& p : model.params())
    if (p == 0.0) p = 0.05 * rng.normal();
  AdapterBank<double> bank;
  model.register_adapter_layers(bank);
  const CameraLabel cam{0};
  bank.add_camera(cam, 4, rng);
  bank.for_each([&](int, LoraAdapter<double>& a) {
    for (double& v : a.B.values()) v = 0.05 * rng.normal();
  });

  double worst = 0;
  std::string worst_at;
  std::size_t checked = 0;
  for (int t = 1; t <= model.arch().timesteps; ++t) {
    GradCheckInput in{Tensor<double>({4, 8, 8}), Tensor<double>({3, 16, 16}), Tensor<double>({4, 8, 8}), t, cam};
    for (double& v : in.x_t.values()) v = rng.uniform(-1.5, 1.5);
    for (double& v : in.rgb.values()) v = rng.uniform(-1, 1);
    for (double& v : in.target.values()) v = rng.uniform(-1, 1);
    const std::size_t per_t = (coordinates + 3) / 4;
    const GradCheckReport r = finite_diff_check(model, bank, in, per_t, rng);
    checked += r.coordinates;
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_at = "t=" + std::to_string(t) + " " + r.worst + " analytic " + fmt(r.worst_analytic) + " numeric " +
                 fmt(r.worst_numeric);
    }
  }
  rep.checks.push_back(below("analytic vs central-difference gradient (max relative)", worst, 1e-4, worst_at));
  rep.checks.push_back({"coordinates checked", static_cast<double>(checked), 64.0, ">=", checked >= 64, ""});

  // Degenerate constant input still yields finite gradients.
  GradCheckInput flat{Tensor<double>({4, 8, 8}), Tensor<double>({3, 16, 16}), Tensor<double>({4, 8, 8}), 1, cam};
  flat.x_t.fill(0.25);
  flat.rgb.fill(0.25);
  flat.target.fill(0.25);
  Gradients<double> g = model.make_gradients();
  loss_and_gradient(model, bank, flat, &g);
  double bad = 0;
  for (double v : g.base) bad += std::isfinite(v) ? 0 : 1;
  for (const auto& [k, ab] : g.adapters) {
    for (double v : ab.first.values()) bad += std::isfinite(v) ? 0 : 1;
    for (double v : ab.second.values()) bad += std::isfinite(v) ? 0 : 1;
  }
  rep.checks.push_back(exact("constant input gives finite gradients (non-finite count)", bad));
  rep.seconds = timer.seconds();
  return rep;
}

VerificationReport verify(Suite suite, std::uint64_t seed) {
  switch (suite) {
    case Suite::marginal: return verify_marginal(seed);
    case Suite::posterior: return verify_posterior(seed);
    case Suite::degenerate: return verify_degenerate(seed);
    case Suite::oracle_sampling: return verify_oracle_sampling(seed);
    case Suite::gradient: return verify_gradient(seed);
  }
  throw std::invalid_argument("unknown suite");
}

}  // namespace rawshift
