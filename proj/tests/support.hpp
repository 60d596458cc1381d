// Shared test helpers. Samplers and reference computations here are written
// independently of the library code paths they check: separate algorithms,
// separate formulas, no shared helpers beyond the RNG engine type.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace testsupport {

// Uniform in (0,1) via the same engine the library uses but through
// std::generate_canonical-free arithmetic, so draws are reproducible here
// without touching library internals.
inline double unit_uniform(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller. The library never uses this transform.
inline double normal_draw(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

// Unit exponential by direct inversion.
inline double exponential_draw(std::mt19937_64& rng) {
  return -std::log(unit_uniform(rng));
}

// Generalized Pareto draw by inversion written from the survival function,
// not the quantile helper the library exposes.
inline double gpd_draw(std::mt19937_64& rng, double sigma, double xi) {
  double u = unit_uniform(rng);
  if (xi == 0.0) return -sigma * std::log(u);
  return sigma * (std::pow(u, -xi) - 1.0) / xi;
}

// One-sample Kolmogorov-Smirnov statistic against a cdf given as a callable.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
  std::sort(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    double lo = static_cast<double>(i) / n;
    double hi = static_cast<double>(i + 1) / n;
    worst = std::max({worst, std::abs(f - lo), std::abs(f - hi)});
  }
  return worst;
}

// 1% critical value of the KS statistic for large n.
inline double ks_critical_1pct(std::size_t n) {
  return 1.63 / std::sqrt(static_cast<double>(n));
}

// Inverts a monotone cdf by bisection. Used to cross-check closed-form
// quantities like return levels against nothing but the cdf.
template <typename Cdf>
double invert_cdf(Cdf cdf, double p, double lo, double hi, int iterations = 200) {
  for (int i = 0; i < iterations; ++i) {
    double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Replays the sequential acceptance rule directly from its definition:
// accept once K consecutive samples in a row fail to exceed the running
// maximum. Returns {accepted, b, t_b}.
struct monitor_replay {
  bool accepted = false;
  std::size_t b = 0;
  double t_b = 0.0;
};

inline monitor_replay replay_monitor(std::span<const double> samples, std::int64_t k) {
  monitor_replay out;
  double running = -1.0;
  std::int64_t consec = 0;
  bool have_max = false;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!have_max || samples[i] > running) {
      running = samples[i];
      have_max = true;
      consec = 0;
    } else if (++consec == k) {
      out.accepted = true;
      out.b = i + 1;
      out.t_b = running;
      return out;
    }
  }
  return out;
}

// Analytic gradient of the return level delta = u + (sigma/xi)((m zeta)^xi - 1)
// with respect to (zeta, sigma, xi), including the xi -> 0 limits. Written
// from the calculus, not from the library's finite differences.
struct return_level_gradient {
  double d_zeta;
  double d_sigma;
  double d_xi;
};

inline return_level_gradient analytic_rl_gradient(double sigma, double xi, double zeta,
                                                  double m) {
  double mz = m * zeta;
  double l = std::log(mz);
  return_level_gradient g{};
  if (xi == 0.0) {
    g.d_sigma = l;
    g.d_zeta = sigma * m / mz;
    g.d_xi = sigma * l * l / 2.0;
    return g;
  }
  double pw = std::pow(mz, xi);
  g.d_sigma = (pw - 1.0) / xi;
  g.d_zeta = sigma * m * std::pow(mz, xi - 1.0);
  g.d_xi = -(sigma / (xi * xi)) * (pw - 1.0) + (sigma / xi) * pw * l;
  return g;
}

// Writes a small CSV trace for CLI tests and returns its path.
inline std::string write_temp_csv(const std::string& name,
                                  const std::vector<double>& values) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "evtail_tests";
  fs::create_directories(dir);
  fs::path file = dir / name;
  std::string body = "time\n";
  for (double v : values) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    body += buf;
  }
  FILE* f = std::fopen(file.string().c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + file.string());
  std::fwrite(body.data(), 1, body.size(), f);
  std::fclose(f);
  return file.string();
}

}  // namespace testsupport
