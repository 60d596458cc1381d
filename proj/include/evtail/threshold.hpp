// threshold.hpp: threshold selection above which the tail model applies.
//
// Thresholds are expressed in multiples of the trace standard deviation
// above the mean. The automatic policy scans downward from mean + 2 sd in
// small multiplicative steps, fitting and validating at each candidate,
// and stops at the first fit that passes; it gives up once the candidate
// falls below mean + 1 sd. Mean-residual-life curves are the classic
// manual diagnostic for the same decision (Coles 2001, sec. 4.3.1).

#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evtail/detail/numeric.hpp"
#include "evtail/errors.hpp"
#include "evtail/predict.hpp"
#include "evtail/tailfit.hpp"
#include "evtail/trace.hpp"

namespace evtail {

struct threshold_policy {
  enum class mode { fixed, sigma_multiple, auto_scan };

  mode kind = mode::auto_scan;
  double value = 0.0;        // threshold for fixed, multiple k for sigma_multiple
  double start = 2.0;        // auto_scan: first candidate, in sd above the mean
  double floor = 1.0;        // auto_scan: lowest candidate, in sd above the mean
  double rate = 0.0005;      // auto_scan: per-step multiplicative decrement

  static threshold_policy fixed(double u) { return {mode::fixed, u, 2.0, 1.0, 0.0005}; }
  static threshold_policy sigma(double k) { return {mode::sigma_multiple, k, 2.0, 1.0, 0.0005}; }
  static threshold_policy auto_scan(double start = 2.0, double floor = 1.0,
                                    double rate = 0.0005) {
    return {mode::auto_scan, 0.0, start, floor, rate};
  }
};

inline double threshold_from_sigma(const trace_summary& summary, double k) {
  if (summary.std_dev == 0.0)
    throw degenerate_trace("threshold_from_sigma: trace has zero standard deviation");
  return summary.mean + k * summary.std_dev;
}

// Excesses x - u over the strict threshold u, in arrival order.
inline std::vector<double> extract_excesses(const timing_trace& trace, double u) {
  std::vector<double> excesses;
  for (double x : trace.samples()) {
    if (x > u) excesses.push_back(x - u);
  }
  return excesses;
}

struct mrl_point {
  double u = 0.0;
  double mean_excess = 0.0;
  std::size_t count = 0;
  double ci_halfwidth = 0.0;  // 95% normal approximation
};

// Mean excess over each grid threshold. Grid points with fewer than two
// exceedances are omitted; the interval uses the sample standard
// deviation, the usual standard-error convention for a mean.
inline std::vector<mrl_point> mean_residual_life(const timing_trace& trace,
                                                 std::span<const double> u_grid) {
  const double z95 = detail::normal_quantile(0.975);
  std::vector<mrl_point> points;
  for (double u : u_grid) {
    auto ex = extract_excesses(trace, u);
    if (ex.size() < 2) continue;
    double sum = 0.0;
    for (double t : ex) sum += t;
    double mean = sum / static_cast<double>(ex.size());
    double ss = 0.0;
    for (double t : ex) {
      double d = t - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(ex.size() - 1));
    points.push_back(
        {u, mean, ex.size(), z95 * sd / std::sqrt(static_cast<double>(ex.size()))});
  }
  return points;
}

// Evenly spaced default grid from the mean up to the third-largest sample,
// the largest threshold that can still keep two exceedances.
inline std::vector<double> default_mrl_grid(const timing_trace& trace, std::size_t n_points = 80) {
  if (n_points < 2) throw invalid_parameter("default_mrl_grid: need at least 2 points");
  std::vector<double> sorted(trace.samples());
  std::sort(sorted.begin(), sorted.end());
  double lo = summarize(trace).mean;
  double hi = sorted.size() >= 3 ? sorted[sorted.size() - 3] : sorted.front();
  std::vector<double> grid;
  if (!(hi > lo)) return {lo};
  for (std::size_t i = 0; i < n_points; ++i)
    grid.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1));
  return grid;
}

inline void write_mrl_csv(const std::filesystem::path& path, std::span<const mrl_point> points) {
  std::ofstream out(path);
  if (!out) throw file_not_found("write_mrl_csv: cannot open " + path.string() + " for writing");
  out << "u,mean_excess,count,ci_halfwidth\n";
  for (const auto& p : points) {
    out << detail::format_double(p.u) << "," << detail::format_double(p.mean_excess) << ","
        << p.count << "," << detail::format_double(p.ci_halfwidth) << "\n";
  }
}

// One candidate examined by the scan, kept for the report so a reader can
// audit why the selected threshold won.
struct scan_step {
  double u = 0.0;
  std::size_t n_exceed = 0;
  bool accepted = false;
  std::string note;
};

struct threshold_selection {
  double u = 0.0;
  gpd_fit fit;
  std::vector<scan_step> trail;
};

class no_valid_threshold : public stat_error {
 public:
  explicit no_valid_threshold(std::vector<scan_step> trail)
      : stat_error("no threshold in the scan range produced a valid fit (" +
                   std::to_string(trail.size()) + " candidates tried)"),
        trail_(std::move(trail)) {}
  const std::vector<scan_step>& trail() const { return trail_; }

 private:
  std::vector<scan_step> trail_;
};

using fit_validator = std::function<validity_verdict(const gpd_fit&)>;

inline validity_verdict default_fit_validator(const gpd_fit& fit) {
  auto horizons = default_horizons();
  return validate_fit(fit, horizons);
}

// Selects a threshold under the given policy. Fixed and sigma policies
// test their single candidate; the auto policy walks the decrement
// schedule u <- u (1 - rate). Every candidate is recorded in the trail.
inline threshold_selection auto_select_threshold(const timing_trace& trace,
                                                 const threshold_policy& policy,
                                                 const fit_validator& validator =
                                                     default_fit_validator) {
  const bool scanning = policy.kind == threshold_policy::mode::auto_scan;
  if (scanning) {
    if (!(policy.start > policy.floor) || !(policy.floor > 0.0))
      throw invalid_parameter("auto_select_threshold: need start > floor > 0");
    if (!(policy.rate > 0.0 && policy.rate <= 0.01))
      throw invalid_parameter("auto_select_threshold: rate must lie in (0, 0.01]");
  }

  const auto summary = summarize(trace);
  double u;
  double floor_u = -std::numeric_limits<double>::infinity();
  switch (policy.kind) {
    case threshold_policy::mode::fixed:
      u = policy.value;
      break;
    case threshold_policy::mode::sigma_multiple:
      u = threshold_from_sigma(summary, policy.value);
      break;
    case threshold_policy::mode::auto_scan:
    default:
      u = threshold_from_sigma(summary, policy.start);
      floor_u = summary.mean + policy.floor * summary.std_dev;
      break;
  }

  // The schedule is geometric, so the step count is bounded for any legal
  // rate; the hard cap only guards degenerate arithmetic (u stuck at 0).
  const std::size_t max_steps = 200000;
  std::vector<scan_step> trail;

  for (std::size_t step = 0;; ++step) {
    scan_step entry;
    entry.u = u;
    auto excesses = extract_excesses(trace, u);
    entry.n_exceed = excesses.size();
    if (excesses.size() < min_exceedances) {
      entry.note = "too few exceedances";
    } else {
      try {
        gpd_fit fit = fit_gpd(excesses, u, trace.size());
        auto verdict = validator(fit);
        if (verdict.valid) {
          entry.accepted = true;
          entry.note = "accepted";
          trail.push_back(entry);
          return {u, fit, std::move(trail)};
        }
        std::string note = "invalid:";
        for (auto f : verdict.reasons) note += std::string(" ") + to_string(f);
        entry.note = note;
      } catch (const fit_diverged&) {
        entry.note = "fit diverged";
      }
    }
    trail.push_back(std::move(entry));

    if (!scanning) throw no_valid_threshold(std::move(trail));
    u *= (1.0 - policy.rate);
    if (u < floor_u || step + 1 >= max_steps) throw no_valid_threshold(std::move(trail));
  }
}

}  // namespace evtail
