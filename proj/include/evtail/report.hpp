// report.hpp: end-to-end analysis of a trace and its JSON report.
//
// The report is self-contained: it records the tool version, the command
// and inputs that produced it, the threshold decision trail, the fit, and
// every derived number, so rerunning the recorded command reproduces the
// file byte for byte. Keys are emitted in sorted order and numbers in
// shortest round-trip form, which keeps serialization deterministic.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evtail/baseline.hpp"
#include "evtail/diagnostics.hpp"
#include "evtail/errors.hpp"
#include "evtail/predict.hpp"
#include "evtail/threshold.hpp"
#include "evtail/tailfit.hpp"
#include "evtail/trace.hpp"
#include "evtail/version.hpp"

namespace evtail {

struct analysis_options {
  threshold_policy policy = threshold_policy::auto_scan();
  std::vector<std::int64_t> horizons = default_horizons();
  double confidence = 0.95;
  std::optional<std::size_t> block_size;  // include the GEV view when set
  std::size_t density_bins = 30;
};

struct analysis_result {
  trace_summary summary;
  threshold_selection selection;
  tail_type type;
  validity_verdict verdict;
  return_level_curve curve;
  std::optional<gev_params> gev;
  std::vector<qq_point> qq;
  density_overlay_data density;
  double extrapolation = 0.0;
};

// Full pipeline: select a threshold, fit, validate, classify, and compute
// the return-level curve plus diagnostics. Throws no_valid_threshold when
// nothing in the policy's range fits, so a returned result always carries
// a valid fit.
inline analysis_result analyze_trace(const timing_trace& trace, const analysis_options& opts) {
  analysis_result r;
  r.summary = summarize(trace);
  r.selection = auto_select_threshold(trace, opts.policy);
  const gpd_fit& fit = r.selection.fit;
  r.type = classify_tail(fit.xi);
  r.verdict = validate_fit(fit, opts.horizons);
  r.curve = compute_return_levels(fit, opts.horizons, opts.confidence);
  if (opts.block_size.has_value()) r.gev = gpd_to_gev(fit, *opts.block_size);
  auto excesses = extract_excesses(trace, r.selection.u);
  r.qq = qq_points(fit, excesses);
  r.density = density_overlay(fit, excesses, opts.density_bins);
  r.extrapolation = extrapolation_bound(fit, r.qq);
  return r;
}

inline nlohmann::json scan_trail_json(const std::vector<scan_step>& trail) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : trail) {
    arr.push_back({{"u", s.u},
                   {"n_exceed", s.n_exceed},
                   {"accepted", s.accepted},
                   {"note", s.note}});
  }
  return arr;
}

inline nlohmann::json policy_json(const threshold_policy& p) {
  switch (p.kind) {
    case threshold_policy::mode::fixed:
      return {{"kind", "fixed"}, {"u", p.value}};
    case threshold_policy::mode::sigma_multiple:
      return {{"kind", "sigma"}, {"k", p.value}};
    case threshold_policy::mode::auto_scan:
    default:
      return {{"kind", "auto"}, {"start", p.start}, {"floor", p.floor}, {"rate", p.rate}};
  }
}

// Context recorded alongside the numbers so a rerun is reproducible.
struct report_context {
  std::string command;              // the invoking command line, verbatim
  std::string input;                // trace path
  std::optional<std::uint64_t> seed;
  std::string qq_file;
  std::string density_file;
  std::string return_level_file;
};

inline nlohmann::json build_report(const timing_trace& trace, const analysis_result& r,
                                   const analysis_options& opts, const report_context& ctx) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& pt : r.curve.points) {
    curve.push_back({{"m", pt.m},
                     {"level", pt.level},
                     {"ci_low", pt.ci_low},
                     {"ci_high", pt.ci_high},
                     {"next_query_probability",
                      exceedance_probability(r.selection.fit, pt.level, 1)}});
  }

  nlohmann::json reasons = nlohmann::json::array();
  for (auto f : r.verdict.reasons) reasons.push_back(to_string(f));

  nlohmann::json j{
      {"tool", {{"name", "evtail"}, {"version", version_string}}},
      {"command", ctx.command},
      {"input", ctx.input},
      {"seed", ctx.seed.has_value() ? nlohmann::json(*ctx.seed) : nlohmann::json(nullptr)},
      {"trace",
       {{"count", r.summary.count},
        {"mean", r.summary.mean},
        {"std_dev", r.summary.std_dev},
        {"min", r.summary.min},
        {"max", r.summary.max},
        {"unit", trace.unit()},
        {"source", trace.source()}}},
      {"threshold",
       {{"policy", policy_json(opts.policy)},
        {"selected_u", r.selection.u},
        {"scan", scan_trail_json(r.selection.trail)}}},
      {"fit", r.selection.fit},
      {"gev", r.gev.has_value() ? nlohmann::json(*r.gev) : nlohmann::json(nullptr)},
      {"tail_type",
       {{"kind", to_string(r.type.kind)}, {"note", to_string(r.type.note)}}},
      {"validity", {{"valid", r.verdict.valid}, {"reasons", reasons}}},
      {"return_levels", {{"confidence", r.curve.confidence}, {"points", curve}}},
      {"extrapolation_bound", r.extrapolation},
      {"diagnostics_files",
       {{"qq", ctx.qq_file}, {"density", ctx.density_file},
        {"return_levels", ctx.return_level_file}}},
  };
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw file_not_found("write_json: cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw file_not_found("read_json: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(0, std::string("invalid JSON: ") + e.what());
  }
  return j;
}

// Formats "value (+/- se)" the way fitted parameters are quoted in text.
inline std::string format_value_pm(double value, double se) {
  return detail::format_sig(value, 4) + " (+/- " + detail::format_sig(se, 2) + ")";
}

// Percent display: one decimal at or above 1%, otherwise two significant
// digits truncated toward zero (0.126% prints as 0.12%).
inline std::string format_probability_percent(double p) {
  double v = 100.0 * p;
  if (v >= 1.0) return detail::format_sig(std::round(v * 10.0) / 10.0, 6) + "%";
  if (v <= 0.0) return "0%";
  int exponent = static_cast<int>(std::floor(std::log10(v)));
  double scale = std::pow(10.0, exponent - 1);
  double truncated = std::floor(v / scale) * scale;
  return detail::format_sig(truncated, 2) + "%";
}

}  // namespace evtail
