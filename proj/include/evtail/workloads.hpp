// workloads.hpp: simulated control workloads that produce settle-time
// traces, plus a synthetic generator with a known tail for calibration.
//
// Both plants integrate with fixed-step explicit Euler. A run settles at
// the earliest time t* such that the state stays inside the settle box
// from t* through the horizon; a run whose final state is outside the box
// did not settle and contributes no sample (it is counted separately).
// Runs are deterministic per seed, and campaign run i draws its own seed
// from (base_seed, i), so runs are independent and order-insensitive.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evtail/detail/numeric.hpp"
#include "evtail/errors.hpp"
#include "evtail/tailfit.hpp"
#include "evtail/trace.hpp"

namespace evtail {

enum class cps_system { pendulum, tora };

inline const char* to_string(cps_system s) {
  switch (s) {
    case cps_system::pendulum: return "pendulum";
    case cps_system::tora: return "tora";
  }
  return "?";
}

struct interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct sim_config {
  cps_system system = cps_system::pendulum;
  double horizon = 0.0;            // simulated time span
  double dt = 0.0;                 // Euler step
  double disturbance_range = 0.0;  // d is uniform in [-range, range]
  double disturbance_hold = 0.0;   // d is redrawn every this many time units
  std::vector<double> settle_halfwidth;  // per-dimension box around the origin
  std::vector<interval> init_ranges;     // per-dimension initial-state box
  std::uint64_t seed = 0;
  std::vector<double> controller_gains;
};

// Inverted pendulum with torque feedback u = g0 theta + g1 omega:
//   theta' = omega
//   omega' = sin(theta) - (u + d) cos(theta)
inline sim_config pendulum_config() {
  sim_config c;
  c.system = cps_system::pendulum;
  c.horizon = 30.0;
  c.dt = 0.02;
  c.disturbance_range = 0.1;
  c.disturbance_hold = 0.1;
  c.settle_halfwidth = {0.05, 0.05};
  c.init_ranges = {{-1.0, 1.0}, {-1.0, 1.0}};
  c.controller_gains = {4.0, 2.0};
  return c;
}

// Translational oscillator with rotational actuator, state
// (x0, x1, x2, x3) = (position, velocity, rotor angle, rotor rate):
//   x0' = x1
//   x1' = -x0 + 0.1 sin(x2) + d
//   x2' = x3
//   x3' = u                      with u = -(k . x)
//
// The gains place the linearized closed-loop poles at -0.05 +/- i,
// -0.5 and -0.6. The oscillator can only shed energy through the weak
// 0.1 sin(x2) coupling, so convergence is necessarily slow and the
// lightly damped placement respects that instead of fighting it.
inline sim_config tora_config() {
  sim_config c;
  c.system = cps_system::tora;
  c.horizon = 300.0;
  c.dt = 0.02;
  c.disturbance_range = 0.01;
  c.disturbance_hold = 0.1;
  c.settle_halfwidth = {0.1, 0.1, 0.1, 0.1};
  c.init_ranges = {{-1.0, 1.0}, {-1.0, 1.0}, {-0.5, 0.5}, {-0.5, 0.5}};
  c.controller_gains = {-1.1175, -0.6725, 0.4125, 1.2};
  return c;
}

struct settle_result {
  std::optional<double> settle_time;  // empty when the run did not settle
  std::size_t steps = 0;              // Euler steps taken
};

using sim_observer = std::function<void(double t, std::span<const double> state)>;

namespace detail {

template <std::size_t N, class Dynamics, class Controller>
settle_result simulate_system(const sim_config& cfg, Dynamics dynamics, Controller controller,
                              const sim_observer& observer) {
  if (cfg.settle_halfwidth.size() != N || cfg.init_ranges.size() != N)
    throw invalid_parameter("simulate: config dimension mismatch, expected " +
                            std::to_string(N));
  if (!(cfg.dt > 0.0) || !(cfg.horizon >= cfg.dt))
    throw invalid_parameter("simulate: need dt > 0 and horizon >= dt");
  if (!(cfg.disturbance_hold > 0.0) || cfg.disturbance_range < 0.0)
    throw invalid_parameter("simulate: need disturbance_hold > 0 and range >= 0");
  for (const auto& r : cfg.init_ranges)
    if (!(r.lo <= r.hi)) throw invalid_parameter("simulate: init range with lo > hi");

  std::mt19937_64 rng(cfg.seed);
  std::array<double, N> x;
  for (std::size_t i = 0; i < N; ++i)
    x[i] = uniform_in(rng, cfg.init_ranges[i].lo, cfg.init_ranges[i].hi);

  const auto n_steps = static_cast<std::int64_t>(std::llround(cfg.horizon / cfg.dt));
  const auto steps_per_hold =
      std::max<std::int64_t>(1, std::llround(cfg.disturbance_hold / cfg.dt));

  auto inside = [&](const std::array<double, N>& s) {
    for (std::size_t i = 0; i < N; ++i)
      if (std::abs(s[i]) > cfg.settle_halfwidth[i]) return false;
    return true;
  };

  std::int64_t last_outside = inside(x) ? -1 : 0;
  if (observer) observer(0.0, std::span<const double>(x.data(), N));

  double d = 0.0;
  for (std::int64_t i = 0; i < n_steps; ++i) {
    if (i % steps_per_hold == 0)
      d = uniform_in(rng, -cfg.disturbance_range, cfg.disturbance_range);
    double u = controller(cfg.controller_gains, x);
    std::array<double, N> dx = dynamics(x, u, d);
    for (std::size_t j = 0; j < N; ++j) {
      x[j] += cfg.dt * dx[j];
      if (std::abs(x[j]) > 1e6)
        throw numeric_blowup("simulate: state component exceeded 1e6 at t = " +
                             format_double(static_cast<double>(i + 1) * cfg.dt));
    }
    if (observer) observer(static_cast<double>(i + 1) * cfg.dt, std::span<const double>(x.data(), N));
    if (!inside(x)) last_outside = i + 1;
  }

  settle_result r;
  r.steps = static_cast<std::size_t>(n_steps);
  if (last_outside == n_steps) return r;  // still outside at the horizon
  r.settle_time = last_outside < 0 ? 0.0 : static_cast<double>(last_outside + 1) * cfg.dt;
  return r;
}

}  // namespace detail

inline settle_result simulate_pendulum(const sim_config& cfg, const sim_observer& observer = {}) {
  if (cfg.system != cps_system::pendulum)
    throw invalid_parameter("simulate_pendulum: config is for a different system");
  if (cfg.controller_gains.size() != 2)
    throw invalid_parameter("simulate_pendulum: need exactly 2 controller gains");
  auto dynamics = [](const std::array<double, 2>& x, double u, double d) {
    return std::array<double, 2>{x[1], std::sin(x[0]) - (u + d) * std::cos(x[0])};
  };
  auto controller = [](const std::vector<double>& g, const std::array<double, 2>& x) {
    return g[0] * x[0] + g[1] * x[1];
  };
  return detail::simulate_system<2>(cfg, dynamics, controller, observer);
}

inline settle_result simulate_tora(const sim_config& cfg, const sim_observer& observer = {}) {
  if (cfg.system != cps_system::tora)
    throw invalid_parameter("simulate_tora: config is for a different system");
  if (cfg.controller_gains.size() != 4)
    throw invalid_parameter("simulate_tora: need exactly 4 controller gains");
  auto dynamics = [](const std::array<double, 4>& x, double u, double d) {
    return std::array<double, 4>{x[1], -x[0] + 0.1 * std::sin(x[2]) + d, x[3], u};
  };
  auto controller = [](const std::vector<double>& g, const std::array<double, 4>& x) {
    return -(g[0] * x[0] + g[1] * x[1] + g[2] * x[2] + g[3] * x[3]);
  };
  return detail::simulate_system<4>(cfg, dynamics, controller, observer);
}

inline settle_result simulate(const sim_config& cfg, const sim_observer& observer = {}) {
  return cfg.system == cps_system::pendulum ? simulate_pendulum(cfg, observer)
                                            : simulate_tora(cfg, observer);
}

struct campaign_result {
  timing_trace trace;
  std::size_t did_not_settle = 0;
  std::size_t runs = 0;
  std::uint64_t base_seed = 0;
  sim_config config;
};

// Runs n_runs independent simulations. Run i uses the seed derived from
// (base_seed, i), so any execution order gives the identical trace.
inline campaign_result run_campaign(const sim_config& cfg, std::size_t n_runs,
                                    std::uint64_t base_seed) {
  if (n_runs < 1) throw invalid_parameter("run_campaign: need at least 1 run");
  std::vector<double> settles;
  settles.reserve(n_runs);
  std::size_t failed = 0;
  for (std::size_t i = 0; i < n_runs; ++i) {
    sim_config rc = cfg;
    rc.seed = detail::derive_seed(base_seed, i);
    auto r = simulate(rc);
    if (r.settle_time.has_value())
      settles.push_back(*r.settle_time);
    else
      ++failed;
  }
  if (settles.empty())
    throw all_runs_failed("run_campaign: no run settled within the horizon");

  std::string source = std::string(to_string(cfg.system)) + " campaign (runs=" +
                       std::to_string(n_runs) + ", seed=" + std::to_string(base_seed) + ")";
  return {timing_trace(std::move(settles), "time units", std::move(source)), failed, n_runs,
          base_seed, cfg};
}

inline void write_campaign_metadata(const std::filesystem::path& path,
                                    const campaign_result& result) {
  nlohmann::json init = nlohmann::json::array();
  for (const auto& r : result.config.init_ranges) init.push_back({r.lo, r.hi});
  nlohmann::json j{
      {"system", to_string(result.config.system)},
      {"runs", result.runs},
      {"base_seed", result.base_seed},
      {"settled", result.trace.size()},
      {"did_not_settle", result.did_not_settle},
      {"config",
       {{"horizon", result.config.horizon},
        {"dt", result.config.dt},
        {"disturbance_range", result.config.disturbance_range},
        {"disturbance_hold", result.config.disturbance_hold},
        {"settle_halfwidth", result.config.settle_halfwidth},
        {"init_ranges", init},
        {"controller_gains", result.config.controller_gains}}},
  };
  std::ofstream out(path);
  if (!out)
    throw file_not_found("write_campaign_metadata: cannot open " + path.string() +
                         " for writing");
  out << j.dump(2) << "\n";
}

// Known ground truth behind a synthetic trace.
struct tail_ground_truth {
  double u = 0.0;
  double sigma_hat = 0.0;
  double xi = 0.0;
  double zeta_u = 0.0;
};

struct synthetic_trace {
  timing_trace trace;
  tail_ground_truth truth;
};

struct synthetic_kind {
  std::string label;
  double xi = 0.0;
};

inline synthetic_kind gumbel_tail() { return {"gumbel_tail", 0.0}; }

inline synthetic_kind frechet_tail(double xi) {
  if (!(xi > 0.0)) throw invalid_parameter("frechet_tail: xi must be positive");
  return {"frechet_tail", xi};
}

inline synthetic_kind weibull_tail(double xi) {
  if (!(xi < 0.0 && xi > -1.0))
    throw invalid_parameter("weibull_tail: xi must lie in (-1, 0)");
  return {"weibull_tail", xi};
}

// Synthetic trace with an exactly generalized-Pareto tail: three tenths of
// the samples are u plus a GPD(0.25 u, xi) excess, the rest fill a light
// uniform body over [u/2, u). Because the GPD family is stable under
// raising the threshold, the tail above any u' >= u is still exactly GPD,
// which makes these traces honest calibration targets for the fitting
// pipeline. The tail fraction is deliberately generous so that even short
// prefixes carry enough exceedances for a stable fit.
inline synthetic_trace synthetic_tail_trace(synthetic_kind kind, double body_scale,
                                            std::size_t n, std::uint64_t seed) {
  if (!(body_scale > 0.0)) throw invalid_parameter("synthetic_tail_trace: body_scale must be positive");
  if (n < 10) throw invalid_parameter("synthetic_tail_trace: need at least 10 samples");

  const double u = body_scale;
  const double sigma = 0.25 * body_scale;
  const double xi = kind.xi;

  const auto n_tail = static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(n)));
  const std::size_t n_body = n - n_tail;

  std::mt19937_64 rng(seed);
  std::vector<double> samples;
  samples.reserve(n);
  for (std::size_t i = 0; i < n_body; ++i)
    samples.push_back(u * (0.5 + 0.5 * detail::u01(rng)));
  for (std::size_t i = 0; i < n_tail; ++i)
    samples.push_back(u + gpd_quantile(detail::u01(rng), sigma, xi));

  // Deterministic Fisher-Yates interleave so the tail is spread through
  // the trace the way a real monitor would see it.
  for (std::size_t i = samples.size() - 1; i > 0; --i) {
    auto j = static_cast<std::size_t>(detail::u01(rng) * static_cast<double>(i + 1));
    if (j > i) j = i;
    std::swap(samples[i], samples[j]);
  }

  tail_ground_truth truth{u, sigma, xi,
                          static_cast<double>(n_tail) / static_cast<double>(n)};
  std::string source = kind.label + " (xi=" + detail::format_double(xi) + ", seed=" +
                       std::to_string(seed) + ")";
  return {timing_trace(std::move(samples), "time units", std::move(source)), truth};
}

}  // namespace evtail
