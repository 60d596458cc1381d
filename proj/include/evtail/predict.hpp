// predict.hpp: worst-case predictions from a fitted exceedance model.
//
// The m-observation return level, the value exceeded on average once per
// m observations, is
//
//   delta_m = u + (sigma_hat / xi) ((m zeta_u)^xi - 1)
//
// with the log limit u + sigma_hat ln(m zeta_u) as xi -> 0. Uncertainty
// propagates by the delta method over the three estimated quantities
// (zeta_u, sigma_hat, xi); zeta_u contributes its binomial variance
// zeta_u (1 - zeta_u) / n_total and is independent of the other two.
// See Coles (2001), sec. 4.3.3.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evtail/detail/numeric.hpp"
#include "evtail/errors.hpp"
#include "evtail/tailfit.hpp"

namespace evtail {

inline std::vector<std::int64_t> default_horizons() { return {500, 1000, 2000, 5000, 10000}; }

namespace detail {

// Return-level formula without preconditions, defined for any m zeta > 0.
// Validity scans and finite-difference gradients evaluate it off the
// supported grid, so it must not throw on m zeta < 1.
inline double raw_return_level(double u, double sigma_hat, double xi, double m_zeta) {
  double big_l = std::log(m_zeta);
  if (std::abs(xi) < xi_zero_tol && std::abs(xi) * std::abs(big_l) < 1e-3) {
    return u + sigma_hat * (big_l + 0.5 * xi * big_l * big_l);
  }
  return u + (sigma_hat / xi) * std::expm1(xi * big_l);
}

// Per-query exceedance probability of a level at or above the threshold,
// clamping the survivor to zero beyond a finite upper endpoint.
inline double per_query_exceedance(const gpd_fit& fit, double level) {
  double t = level - fit.u;
  if (fit.xi < 0.0 && t >= gpd_support_end(fit.sigma_hat, fit.xi)) return 0.0;
  return fit.zeta_u * (1.0 - gpd_cdf(t, fit.sigma_hat, fit.xi));
}

}  // namespace detail

inline double return_level(const gpd_fit& fit, std::int64_t m) {
  detail::check_gpd_params(fit.sigma_hat, fit.xi);
  double m_zeta = static_cast<double>(m) * fit.zeta_u;
  if (m < 1 || m_zeta < 1.0)
    throw below_threshold("return_level: m zeta_u = " + detail::format_double(m_zeta) +
                          " is below 1, the level would sit under the threshold");
  return detail::raw_return_level(fit.u, fit.sigma_hat, fit.xi, m_zeta);
}

// Two-sided delta-method confidence interval for the m-observation return
// level. The gradient over (zeta_u, sigma_hat, xi) is taken by central
// finite differences of the return-level formula; the interval is clipped
// below at u since a return level under the threshold is meaningless. It
// is deliberately not clipped at the observed maximum.
inline std::pair<double, double> return_level_ci(const gpd_fit& fit, std::int64_t m,
                                                 double confidence = 0.95) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw invalid_parameter("return_level_ci: confidence must lie in (0, 1)");
  double level = return_level(fit, m);
  if (!fit.has_se)
    throw singular_information("return_level_ci: fit carries no covariance matrix");

  const double dm = static_cast<double>(m);
  auto level_at = [&](double zeta, double sigma, double xi) {
    return detail::raw_return_level(fit.u, sigma, xi, dm * zeta);
  };
  const double theta[3] = {fit.zeta_u, fit.sigma_hat, fit.xi};
  double grad[3];
  for (int i = 0; i < 3; ++i) {
    double h = 1e-6 * (1.0 + std::abs(theta[i]));
    double p[3] = {theta[0], theta[1], theta[2]};
    double q[3] = {theta[0], theta[1], theta[2]};
    p[i] += h;
    q[i] -= h;
    grad[i] = (level_at(p[0], p[1], p[2]) - level_at(q[0], q[1], q[2])) / (2.0 * h);
  }

  const double var_zeta = fit.zeta_u * (1.0 - fit.zeta_u) / static_cast<double>(fit.n_total);
  double var = grad[0] * grad[0] * var_zeta;
  var += grad[1] * (fit.cov[0][0] * grad[1] + fit.cov[0][1] * grad[2]);
  var += grad[2] * (fit.cov[1][0] * grad[1] + fit.cov[1][1] * grad[2]);
  var = std::max(var, 0.0);

  const double z = detail::normal_quantile(0.5 + confidence / 2.0);
  const double half = z * std::sqrt(var);
  double lo = std::max(level - half, fit.u);
  double hi = level + half;
  return {lo, hi};
}

// Probability that at least one of the next s queries exceeds the level.
// s = 1 returns the per-query probability exactly.
inline double exceedance_probability(const gpd_fit& fit, double level, std::int64_t s) {
  detail::check_gpd_params(fit.sigma_hat, fit.xi);
  if (s < 0) throw invalid_parameter("exceedance_probability: s must be nonnegative");
  if (level < fit.u)
    throw below_threshold("exceedance_probability: level " + detail::format_double(level) +
                          " is below the threshold " + detail::format_double(fit.u));
  double p = detail::per_query_exceedance(fit, level);
  if (s == 0) return 0.0;
  if (s == 1) return p;
  if (p >= 1.0) return 1.0;
  return -std::expm1(static_cast<double>(s) * std::log1p(-p));
}

struct return_period_result {
  double period = 0.0;            // expected queries until the level is exceeded
  double next_probability = 0.0;  // per-query exceedance probability
};

inline return_period_result return_period(const gpd_fit& fit, double level) {
  double p = exceedance_probability(fit, level, 1);
  if (p == 0.0)
    throw infinite_period("return_period: level is never exceeded under this fit");
  return {1.0 / p, p};
}

enum class validity_flag {
  shape_too_large,
  negative_return_level,
  non_monotone_return_levels,
  too_few_exceedances,
};

inline const char* to_string(validity_flag f) {
  switch (f) {
    case validity_flag::shape_too_large: return "ShapeTooLarge";
    case validity_flag::negative_return_level: return "NegativeReturnLevel";
    case validity_flag::non_monotone_return_levels: return "NonMonotoneReturnLevels";
    case validity_flag::too_few_exceedances: return "TooFewExceedances";
  }
  return "?";
}

struct validity_verdict {
  bool valid = true;
  std::vector<validity_flag> reasons;
};

// Sanity screening of a fit before it is allowed to extrapolate. A shape
// at or above 1 has no finite mean, so no worst-case statement survives;
// the return-level curve over the horizon grid must be positive and
// strictly increasing.
inline validity_verdict validate_fit(const gpd_fit& fit, std::span<const std::int64_t> horizons) {
  validity_verdict v;
  auto flag = [&](validity_flag f) {
    v.valid = false;
    v.reasons.push_back(f);
  };

  if (fit.xi >= 1.0) flag(validity_flag::shape_too_large);
  if (fit.n_exceed < min_exceedances) flag(validity_flag::too_few_exceedances);

  std::vector<std::int64_t> grid(horizons.begin(), horizons.end());
  std::sort(grid.begin(), grid.end());
  bool negative = false;
  bool non_monotone = false;
  double prev = -std::numeric_limits<double>::infinity();
  for (std::int64_t m : grid) {
    double level = detail::raw_return_level(fit.u, fit.sigma_hat, fit.xi,
                                            static_cast<double>(m) * fit.zeta_u);
    if (level < 0.0) negative = true;
    if (!(level > prev)) non_monotone = true;
    prev = level;
  }
  if (negative) flag(validity_flag::negative_return_level);
  if (non_monotone) flag(validity_flag::non_monotone_return_levels);
  return v;
}

struct return_level_point {
  std::int64_t m = 0;
  double level = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct return_level_curve {
  double confidence = 0.95;
  std::vector<return_level_point> points;
};

inline return_level_curve compute_return_levels(const gpd_fit& fit,
                                                std::span<const std::int64_t> horizons,
                                                double confidence = 0.95) {
  return_level_curve curve;
  curve.confidence = confidence;
  for (std::int64_t m : horizons) {
    auto [lo, hi] = return_level_ci(fit, m, confidence);
    curve.points.push_back({m, return_level(fit, m), lo, hi});
  }
  return curve;
}

// Marks each requested horizon with whether the realized value fell inside
// the (closed) confidence interval of the curve.
inline std::map<std::int64_t, bool> accuracy_check(const return_level_curve& curve,
                                                   const std::map<std::int64_t, double>& actual) {
  std::map<std::int64_t, bool> hits;
  for (const auto& [m, value] : actual) {
    const return_level_point* found = nullptr;
    for (const auto& pt : curve.points) {
      if (pt.m == m) {
        found = &pt;
        break;
      }
    }
    if (!found)
      throw missing_horizon("accuracy_check: horizon " + std::to_string(m) +
                            " is not on the curve");
    hits[m] = value >= found->ci_low && value <= found->ci_high;
  }
  return hits;
}

inline void write_return_level_csv(const std::filesystem::path& path,
                                   const return_level_curve& curve) {
  std::ofstream out(path);
  if (!out)
    throw file_not_found("write_return_level_csv: cannot open " + path.string() +
                         " for writing");
  out << "m,level,ci_low,ci_high\n";
  for (const auto& pt : curve.points) {
    out << pt.m << "," << detail::format_double(pt.level) << ","
        << detail::format_double(pt.ci_low) << "," << detail::format_double(pt.ci_high) << "\n";
  }
}

}  // namespace evtail
