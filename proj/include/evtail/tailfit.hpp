// tailfit.hpp: generalized Pareto fitting over threshold excesses.
//
// The model for an excess t = x - u above a threshold u is
//
//   H(t) = 1 - (1 + xi t / sigma_hat)^(-1/xi),        xi != 0
//   H(t) = 1 - exp(-t / sigma_hat),                   xi  = 0
//
// with scale sigma_hat > 0 and shape xi. For xi < 0 the support is the
// finite interval [0, sigma_hat/|xi|]. See Coles, An Introduction to
// Statistical Modeling of Extreme Values (2001), ch. 4.
//
// All xi branches cross over to series-expanded limits for |xi| < 1e-8 so
// that values vary continuously through zero instead of cancelling.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evtail/detail/numeric.hpp"
#include "evtail/detail/simplex.hpp"
#include "evtail/errors.hpp"

namespace evtail {

inline constexpr double xi_zero_tol = 1e-8;

// Fewest exceedances a fit will accept. Below this the likelihood surface
// is too flat for the optimizer or the Hessian to mean anything.
inline constexpr std::size_t min_exceedances = 10;

namespace detail {

inline void check_gpd_params(double sigma_hat, double xi) {
  if (!(sigma_hat > 0.0) || !std::isfinite(sigma_hat))
    throw invalid_parameter("gpd: sigma_hat must be positive, got " + format_double(sigma_hat));
  if (!std::isfinite(xi)) throw invalid_parameter("gpd: xi is not finite");
}

// True when the series branch around xi = 0 is both needed and valid.
inline bool near_zero_xi(double xi, double scaled) {
  return std::abs(xi) < xi_zero_tol && std::abs(xi) * std::abs(scaled) < 1e-3;
}

}  // namespace detail

// Upper end of the excess support: sigma_hat/|xi| for xi < 0, infinite
// otherwise.
inline double gpd_support_end(double sigma_hat, double xi) {
  detail::check_gpd_params(sigma_hat, xi);
  if (xi < 0.0) return sigma_hat / -xi;
  return std::numeric_limits<double>::infinity();
}

inline double gpd_cdf(double t, double sigma_hat, double xi) {
  detail::check_gpd_params(sigma_hat, xi);
  if (!(t >= 0.0)) throw out_of_support("gpd_cdf: t must be nonnegative");
  double z = t / sigma_hat;
  if (detail::near_zero_xi(xi, z)) {
    // H = 1 - exp(-(z - xi z^2 / 2)), first-order expansion in xi.
    return -std::expm1(-(z - 0.5 * xi * z * z));
  }
  double w = 1.0 + xi * z;
  if (w < 0.0)
    throw out_of_support("gpd_cdf: t = " + detail::format_double(t) +
                         " beyond upper endpoint " +
                         detail::format_double(gpd_support_end(sigma_hat, xi)));
  if (w == 0.0) return 1.0;
  return -std::expm1(-std::log(w) / xi);
}

// Density of the excess distribution, zero beyond the upper endpoint.
inline double gpd_pdf(double t, double sigma_hat, double xi) {
  detail::check_gpd_params(sigma_hat, xi);
  if (!(t >= 0.0)) throw out_of_support("gpd_pdf: t must be nonnegative");
  double z = t / sigma_hat;
  if (detail::near_zero_xi(xi, z)) {
    return std::exp(-z - xi * (z - 0.5 * z * z)) / sigma_hat;
  }
  double w = 1.0 + xi * z;
  if (w <= 0.0) return 0.0;
  return std::exp(-(1.0 + 1.0 / xi) * std::log(w)) / sigma_hat;
}

// Quantile of the excess distribution at probability q in [0, 1).
inline double gpd_quantile(double q, double sigma_hat, double xi) {
  detail::check_gpd_params(sigma_hat, xi);
  if (!(q >= 0.0 && q < 1.0)) throw invalid_parameter("gpd_quantile: q must lie in [0, 1)");
  double big_l = -std::log1p(-q);
  if (detail::near_zero_xi(xi, big_l)) {
    return sigma_hat * (big_l + 0.5 * xi * big_l * big_l);
  }
  return (sigma_hat / xi) * std::expm1(xi * big_l);
}

// Log-likelihood of independent excesses under GPD(sigma_hat, xi).
inline double gpd_loglik(std::span<const double> excesses, double sigma_hat, double xi) {
  detail::check_gpd_params(sigma_hat, xi);
  double acc = 0.0;
  const double log_sigma = std::log(sigma_hat);
  for (double t : excesses) {
    if (!(t >= 0.0)) throw out_of_support("gpd_loglik: excess must be nonnegative");
    double z = t / sigma_hat;
    if (detail::near_zero_xi(xi, z)) {
      acc += -log_sigma - z - xi * (z - 0.5 * z * z);
      continue;
    }
    double w = 1.0 + xi * z;
    if (w <= 0.0)
      throw out_of_support("gpd_loglik: excess " + detail::format_double(t) +
                           " outside support for xi = " + detail::format_double(xi));
    acc += -log_sigma - (1.0 + 1.0 / xi) * std::log(w);
  }
  return acc;
}

// A fitted exceedance model. zeta_u is the empirical exceedance rate
// n_exceed / n_total of the trace the excesses came from; the pair
// (cov, se_*) is absent (has_se false, NaN entries) when the observed
// information matrix was singular at the optimum.
struct gpd_fit {
  double u = 0.0;
  double sigma_hat = 0.0;
  double xi = 0.0;
  double zeta_u = 0.0;
  std::size_t n_total = 0;
  std::size_t n_exceed = 0;
  double se_sigma = std::numeric_limits<double>::quiet_NaN();
  double se_xi = std::numeric_limits<double>::quiet_NaN();
  std::array<std::array<double, 2>, 2> cov{{{0.0, 0.0}, {0.0, 0.0}}};
  double log_lik = 0.0;
  bool has_se = false;
};

namespace detail {

// Penalized negative log-likelihood used by the simplex search. The box
// xi in (-1, 2) and sigma_hat > 0 are enforced with a large sloped penalty
// so vertices outside the region are pulled back rather than rejected.
inline double gpd_negloglik_penalized(std::span<const double> excesses, double max_excess,
                                      double sigma_hat, double xi) {
  double violation = 0.0;
  if (!(sigma_hat > 0.0)) violation += 1.0 - sigma_hat;
  if (xi <= -1.0) violation += -1.0 - xi + 1.0;
  if (xi >= 2.0) violation += xi - 2.0 + 1.0;
  if (violation == 0.0 && xi < 0.0) {
    double end = sigma_hat / -xi;
    if (max_excess >= end) violation += (max_excess - end) / max_excess + 1.0;
  }
  if (violation > 0.0) return 1e12 * (1.0 + violation);
  return -gpd_loglik(excesses, sigma_hat, xi);
}

}  // namespace detail

// Maximum-likelihood GPD fit to excesses above u, taken from a trace of
// n_total samples. Initial values follow the probability-weighted moment
// idea of Hosking and Wallis (1987):
//
//   xi0        = (1 - mean^2 / var) / 2
//   sigma_hat0 = mean (mean^2 / var + 1) / 2
//
// then a Nelder-Mead search maximizes the likelihood inside the box
// xi in (-1, 2), stopping when the simplex diameter falls below 1e-8.
// Standard errors come from the inverse of the finite-difference Hessian
// of the negative log-likelihood (step 1e-4 (1 + |theta|)); if that
// matrix is not positive definite the fit is returned without them.
inline gpd_fit fit_gpd(std::span<const double> excesses, double u, std::size_t n_total) {
  const std::size_t k = excesses.size();
  if (k < min_exceedances)
    throw too_few_exceedances("fit_gpd: " + std::to_string(k) + " excesses, need at least " +
                              std::to_string(min_exceedances));
  if (n_total < k)
    throw invalid_parameter("fit_gpd: n_total smaller than the number of excesses");

  double sum = 0.0;
  double max_excess = 0.0;
  for (double t : excesses) {
    if (!std::isfinite(t) || t <= 0.0)
      throw invalid_parameter("fit_gpd: excesses must be positive and finite");
    sum += t;
    max_excess = std::max(max_excess, t);
  }
  const double mean = sum / static_cast<double>(k);
  double ss = 0.0;
  for (double t : excesses) {
    double d = t - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(k);

  double sigma0, xi0;
  if (var > 0.0 && mean * mean / var <= 1e3) {
    double ratio = mean * mean / var;
    xi0 = 0.5 * (1.0 - ratio);
    sigma0 = 0.5 * mean * (ratio + 1.0);
  } else {
    // Nearly degenerate spread; start from an exponential-ish guess.
    sigma0 = mean;
    xi0 = 0.1;
  }
  xi0 = std::clamp(xi0, -0.9, 1.5);
  if (xi0 < 0.0) {
    // Keep the whole initial simplex inside the support constraint.
    xi0 = std::max(xi0, -0.9 * sigma0 / max_excess);
  }

  auto objective = [&](const std::array<double, 2>& p) {
    return detail::gpd_negloglik_penalized(excesses, max_excess, p[0], p[1]);
  };
  auto res = detail::nelder_mead2(objective, {sigma0, xi0}, {0.5 * sigma0, 0.2}, 1e-8, 10000);
  if (!res.converged)
    throw fit_diverged("fit_gpd: simplex did not converge within 10000 evaluations");

  gpd_fit fit;
  fit.u = u;
  fit.sigma_hat = res.x[0];
  fit.xi = res.x[1];
  fit.n_total = n_total;
  fit.n_exceed = k;
  fit.zeta_u = static_cast<double>(k) / static_cast<double>(n_total);
  fit.log_lik = -res.fx;

  // Observed information via a central-difference Hessian at the optimum.
  const double h0 = 1e-4 * (1.0 + std::abs(fit.sigma_hat));
  const double h1 = 1e-4 * (1.0 + std::abs(fit.xi));
  auto nll = [&](double s, double x) {
    return detail::gpd_negloglik_penalized(excesses, max_excess, s, x);
  };
  const double f00 = res.fx;
  double hess[2][2];
  hess[0][0] = (nll(fit.sigma_hat + h0, fit.xi) - 2.0 * f00 + nll(fit.sigma_hat - h0, fit.xi)) /
               (h0 * h0);
  hess[1][1] = (nll(fit.sigma_hat, fit.xi + h1) - 2.0 * f00 + nll(fit.sigma_hat, fit.xi - h1)) /
               (h1 * h1);
  hess[0][1] = (nll(fit.sigma_hat + h0, fit.xi + h1) - nll(fit.sigma_hat + h0, fit.xi - h1) -
                nll(fit.sigma_hat - h0, fit.xi + h1) + nll(fit.sigma_hat - h0, fit.xi - h1)) /
               (4.0 * h0 * h1);
  hess[1][0] = hess[0][1];

  const double det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
  bool ok = std::isfinite(det) && det > 0.0 && hess[0][0] > 0.0 &&
            std::isfinite(hess[0][0]) && std::isfinite(hess[1][1]) && std::isfinite(hess[0][1]);
  // A penalty value leaking into any stencil point poisons the Hessian.
  ok = ok && std::abs(hess[0][0]) < 1e11 && std::abs(hess[1][1]) < 1e11;
  if (ok) {
    fit.cov = {{{hess[1][1] / det, -hess[0][1] / det}, {-hess[0][1] / det, hess[0][0] / det}}};
    if (fit.cov[0][0] >= 0.0 && fit.cov[1][1] >= 0.0) {
      fit.se_sigma = std::sqrt(fit.cov[0][0]);
      fit.se_xi = std::sqrt(fit.cov[1][1]);
      fit.has_se = true;
    }
  }
  if (!fit.has_se) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    fit.cov = {{{nan, nan}, {nan, nan}}};
    fit.se_sigma = nan;
    fit.se_xi = nan;
  }
  return fit;
}

// Equivalent block-maximum GEV parameters for a block of block_size
// observations, the conventional way to present a threshold fit:
//
//   sigma = sigma_hat (B zeta_u)^xi
//   mu    = u - sigma ((B zeta_u)^(-xi) - 1) / xi
//
// collapsing to sigma = sigma_hat, mu = u + sigma_hat ln(B zeta_u) as
// xi -> 0. The identity sigma_hat = sigma + xi (u - mu) round-trips.
struct gev_params {
  double mu = 0.0;
  double sigma = 0.0;
  double xi = 0.0;
  std::size_t block_size = 0;
};

inline gev_params gpd_to_gev(const gpd_fit& fit, std::size_t block_size) {
  if (block_size < 1) throw invalid_parameter("gpd_to_gev: block_size must be at least 1");
  if (!(fit.zeta_u > 0.0)) throw invalid_parameter("gpd_to_gev: zeta_u must be positive");
  detail::check_gpd_params(fit.sigma_hat, fit.xi);

  gev_params g;
  g.xi = fit.xi;
  g.block_size = block_size;
  const double bz = static_cast<double>(block_size) * fit.zeta_u;
  const double log_bz = std::log(bz);
  if (std::abs(fit.xi) < xi_zero_tol) {
    g.sigma = fit.sigma_hat;
    g.mu = fit.u + fit.sigma_hat * log_bz;
  } else {
    g.sigma = fit.sigma_hat * std::exp(fit.xi * log_bz);
    g.mu = fit.u - g.sigma * std::expm1(-fit.xi * log_bz) / fit.xi;
  }
  return g;
}

// Inverse-CDF sampler for the excess distribution. Deterministic for a
// given seed; every draw lies inside the support.
inline std::vector<double> sample_gpd(double sigma_hat, double xi, std::size_t n,
                                      std::uint64_t seed) {
  detail::check_gpd_params(sigma_hat, xi);
  std::mt19937_64 rng(seed);
  std::vector<double> draws(n);
  for (std::size_t i = 0; i < n; ++i) draws[i] = gpd_quantile(detail::u01(rng), sigma_hat, xi);
  return draws;
}

inline void to_json(nlohmann::json& j, const gpd_fit& fit) {
  j = nlohmann::json{{"u", fit.u},
                     {"sigma_hat", fit.sigma_hat},
                     {"xi", fit.xi},
                     {"zeta_u", fit.zeta_u},
                     {"n_total", fit.n_total},
                     {"n_exceed", fit.n_exceed},
                     {"log_lik", fit.log_lik}};
  if (fit.has_se) {
    j["se_sigma"] = fit.se_sigma;
    j["se_xi"] = fit.se_xi;
    j["cov"] = {{fit.cov[0][0], fit.cov[0][1]}, {fit.cov[1][0], fit.cov[1][1]}};
  } else {
    j["se_sigma"] = nullptr;
    j["se_xi"] = nullptr;
    j["cov"] = nullptr;
  }
}

inline void from_json(const nlohmann::json& j, gpd_fit& fit) {
  j.at("u").get_to(fit.u);
  j.at("sigma_hat").get_to(fit.sigma_hat);
  j.at("xi").get_to(fit.xi);
  j.at("zeta_u").get_to(fit.zeta_u);
  j.at("n_total").get_to(fit.n_total);
  j.at("n_exceed").get_to(fit.n_exceed);
  j.at("log_lik").get_to(fit.log_lik);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (j.at("se_sigma").is_null() || j.at("cov").is_null()) {
    fit.has_se = false;
    fit.se_sigma = nan;
    fit.se_xi = nan;
    fit.cov = {{{nan, nan}, {nan, nan}}};
  } else {
    fit.has_se = true;
    j.at("se_sigma").get_to(fit.se_sigma);
    j.at("se_xi").get_to(fit.se_xi);
    fit.cov[0][0] = j.at("cov")[0][0].get<double>();
    fit.cov[0][1] = j.at("cov")[0][1].get<double>();
    fit.cov[1][0] = j.at("cov")[1][0].get<double>();
    fit.cov[1][1] = j.at("cov")[1][1].get<double>();
  }
}

inline void to_json(nlohmann::json& j, const gev_params& g) {
  j = nlohmann::json{
      {"mu", g.mu}, {"sigma", g.sigma}, {"xi", g.xi}, {"block_size", g.block_size}};
}

inline void from_json(const nlohmann::json& j, gev_params& g) {
  j.at("mu").get_to(g.mu);
  j.at("sigma").get_to(g.sigma);
  j.at("xi").get_to(g.xi);
  j.at("block_size").get_to(g.block_size);
}

}  // namespace evtail
