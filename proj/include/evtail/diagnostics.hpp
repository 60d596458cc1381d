// diagnostics.hpp: goodness-of-fit views and tail classification.
//
// None of this decides anything by itself; it produces the artifacts a
// person looks at before trusting an extrapolation. QQ points use Weibull
// plotting positions i/(k+1); the density overlay bins excesses into a
// histogram normalized to integrate to one and samples the model density
// alongside; the extrapolation bound is the largest model quantile the
// empirical quantiles still track within a relative tolerance.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evtail/detail/numeric.hpp"
#include "evtail/errors.hpp"
#include "evtail/tailfit.hpp"

namespace evtail {

enum class tail_family { gumbel, frechet, weibull };

enum class guarantee_note {
  bounded_horizon_ok,   // light tail, statements hold over bounded horizons
  limited_guarantees,   // heavy tail with finite mean, treat with caution
  no_guarantee,         // shape at or above 1, no finite mean
  long_horizon_ok,      // finite endpoint, long-horizon statements hold
};

inline const char* to_string(tail_family f) {
  switch (f) {
    case tail_family::gumbel: return "gumbel";
    case tail_family::frechet: return "frechet";
    case tail_family::weibull: return "weibull";
  }
  return "?";
}

inline const char* to_string(guarantee_note n) {
  switch (n) {
    case guarantee_note::bounded_horizon_ok: return "BoundedHorizonOK";
    case guarantee_note::limited_guarantees: return "LimitedGuarantees";
    case guarantee_note::no_guarantee: return "NoGuarantee";
    case guarantee_note::long_horizon_ok: return "LongHorizonOK";
  }
  return "?";
}

struct tail_type {
  tail_family kind = tail_family::gumbel;
  guarantee_note note = guarantee_note::bounded_horizon_ok;
};

// Classifies the fitted shape into the three classical tail families with
// a tolerance band around zero (default 0.05).
inline tail_type classify_tail(double xi, double tol = 0.05) {
  if (!(tol > 0.0)) throw invalid_parameter("classify_tail: tol must be positive");
  if (xi >= 1.0) return {tail_family::frechet, guarantee_note::no_guarantee};
  if (xi >= tol) return {tail_family::frechet, guarantee_note::limited_guarantees};
  if (xi <= -tol) return {tail_family::weibull, guarantee_note::long_horizon_ok};
  return {tail_family::gumbel, guarantee_note::bounded_horizon_ok};
}

struct qq_point {
  double quantile = 0.0;   // plotting position i/(k+1)
  double empirical = 0.0;  // u + i-th smallest excess
  double model = 0.0;      // u + H^-1(quantile)
};

inline std::vector<qq_point> qq_points(const gpd_fit& fit, std::span<const double> excesses) {
  if (excesses.size() < 2) throw invalid_parameter("qq_points: need at least 2 excesses");
  std::vector<double> sorted(excesses.begin(), excesses.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = sorted.size();
  std::vector<qq_point> points(k);
  for (std::size_t i = 1; i <= k; ++i) {
    double q = static_cast<double>(i) / static_cast<double>(k + 1);
    points[i - 1] = {q, fit.u + sorted[i - 1],
                     fit.u + gpd_quantile(q, fit.sigma_hat, fit.xi)};
  }
  return points;
}

struct density_overlay_data {
  // Histogram of excesses over [0, max excess], midpoint and density.
  std::vector<std::pair<double, double>> histogram;
  // Model density sampled at 200 evenly spaced points over the same range.
  std::vector<std::pair<double, double>> model_curve;
};

inline density_overlay_data density_overlay(const gpd_fit& fit, std::span<const double> excesses,
                                            std::size_t bins) {
  if (bins < 5) throw invalid_parameter("density_overlay: need at least 5 bins");
  if (excesses.empty()) throw invalid_parameter("density_overlay: no excesses");
  double top = *std::max_element(excesses.begin(), excesses.end());
  if (!(top > 0.0)) throw invalid_parameter("density_overlay: excesses must be positive");

  density_overlay_data data;
  const double width = top / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double t : excesses) {
    auto idx = static_cast<std::size_t>(t / width);
    if (idx >= bins) idx = bins - 1;  // the maximum lands in the last bin
    ++counts[idx];
  }
  const double n = static_cast<double>(excesses.size());
  for (std::size_t i = 0; i < bins; ++i) {
    double mid = (static_cast<double>(i) + 0.5) * width;
    data.histogram.emplace_back(mid, static_cast<double>(counts[i]) / (n * width));
  }

  constexpr std::size_t curve_points = 200;
  for (std::size_t j = 0; j < curve_points; ++j) {
    double t = top * static_cast<double>(j) / static_cast<double>(curve_points - 1);
    data.model_curve.emplace_back(t, gpd_pdf(t, fit.sigma_hat, fit.xi));
  }
  return data;
}

// Largest model value whose QQ point still agrees with the data within the
// relative tolerance; predictions past it rest on the model alone. Falls
// back to the threshold when no point qualifies.
inline double extrapolation_bound(const gpd_fit& fit, std::span<const qq_point> points,
                                  double rel_tol = 0.05) {
  if (!(rel_tol > 0.0)) throw invalid_parameter("extrapolation_bound: rel_tol must be positive");
  double bound = fit.u;
  bool any = false;
  for (const auto& p : points) {
    if (p.model == 0.0) continue;
    if (std::abs(p.empirical - p.model) / std::abs(p.model) < rel_tol) {
      if (!any || p.model > bound) bound = p.model;
      any = true;
    }
  }
  return bound;
}

inline void write_qq_csv(const std::filesystem::path& path, std::span<const qq_point> points) {
  std::ofstream out(path);
  if (!out) throw file_not_found("write_qq_csv: cannot open " + path.string() + " for writing");
  out << "quantile,empirical,model\n";
  for (const auto& p : points) {
    out << detail::format_double(p.quantile) << "," << detail::format_double(p.empirical) << ","
        << detail::format_double(p.model) << "\n";
  }
}

inline void write_density_csv(const std::filesystem::path& path,
                              const density_overlay_data& data) {
  std::ofstream out(path);
  if (!out)
    throw file_not_found("write_density_csv: cannot open " + path.string() + " for writing");
  out << "series,x,y\n";
  for (const auto& [x, y] : data.histogram)
    out << "empirical," << detail::format_double(x) << "," << detail::format_double(y) << "\n";
  for (const auto& [x, y] : data.model_curve)
    out << "model," << detail::format_double(x) << "," << detail::format_double(y) << "\n";
}

}  // namespace evtail
