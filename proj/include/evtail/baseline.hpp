// baseline.hpp: the sequential Bayes-factor stopping rule used as the
// comparison baseline for tail extrapolation.
//
// The monitor watches a stream of measurements and accepts the running
// maximum as the answer once K consecutive samples fail to set a new
// record, where K is the smallest integer with
//
//   K >= ceil(-log2(B) / log2(theta))
//
// for Bayes factor threshold B and coverage probability theta (B = 100,
// theta = 0.95 gives K = 90). After acceptance at sample b with value
// T_b, the rule of three bounds the unseen exceedance probability by
// [0, 3/K], and the signed prediction error of a model value RL against
// the later realized maximum T_n is (RL - T_n) / (T_n - T_b), clamped to
// [-9.99, +9.99] with a zero denominator taking the sign of the numerator.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evtail/detail/numeric.hpp"
#include "evtail/errors.hpp"
#include "evtail/trace.hpp"

namespace evtail {

inline std::int64_t jeffreys_required_samples(double bayes_factor, double theta) {
  if (!(bayes_factor >= 1.0) || !std::isfinite(bayes_factor))
    throw invalid_parameter("jeffreys_required_samples: Bayes factor must be at least 1");
  if (!(theta > 0.0 && theta < 1.0))
    throw invalid_parameter("jeffreys_required_samples: theta must lie in (0, 1)");
  if (bayes_factor == 1.0) return 0;
  long double ratio = -std::log2(static_cast<long double>(bayes_factor)) /
                      std::log2(static_cast<long double>(theta));
  auto k = static_cast<std::int64_t>(std::ceil(ratio));
  // ceil can land one off when the ratio sits on a representation edge.
  while (k > 0 && static_cast<long double>(k - 1) >= ratio) --k;
  while (static_cast<long double>(k) < ratio) ++k;
  return k;
}

struct sequential_test_state {
  std::int64_t k_required = 0;  // consecutive non-records needed to accept
  double running_max = std::numeric_limits<double>::quiet_NaN();
  std::int64_t consec = 0;
  std::int64_t samples_seen = 0;
  bool accepted = false;
  std::int64_t b = 0;  // samples consumed at acceptance
  double t_b = std::numeric_limits<double>::quiet_NaN();
};

inline sequential_test_state make_sequential_test(std::int64_t k_required) {
  if (k_required < 1)
    throw invalid_parameter("make_sequential_test: K must be at least 1");
  sequential_test_state st;
  st.k_required = k_required;
  return st;
}

// Feeds one sample. The first sample seeds the running maximum; afterwards
// a new record resets the consecutive counter and anything else advances
// it, accepting when it reaches K.
inline void jeffreys_feed(sequential_test_state& st, double sample) {
  if (st.accepted) throw already_accepted("jeffreys_feed: monitor already accepted");
  ++st.samples_seen;
  if (st.samples_seen == 1 || sample > st.running_max) {
    st.running_max = sample;
    st.consec = 0;
    return;
  }
  ++st.consec;
  if (st.consec == st.k_required) {
    st.accepted = true;
    st.b = st.samples_seen;
    st.t_b = st.running_max;
  }
}

// Runs the monitor over a trace prefix, stopping at acceptance.
inline sequential_test_state run_monitor(const timing_trace& trace, std::int64_t k_required) {
  auto st = make_sequential_test(k_required);
  for (double x : trace.samples()) {
    jeffreys_feed(st, x);
    if (st.accepted) break;
  }
  return st;
}

// Rule-of-three interval for a probability after K consecutive successes
// with no failure observed. Needs K >= 30 to be meaningful.
inline std::pair<double, double> rule_of_three(std::int64_t k) {
  if (k < 30)
    throw too_few_observations("rule_of_three: K = " + std::to_string(k) +
                               " is below 30, the approximation does not apply");
  return {0.0, 3.0 / static_cast<double>(k)};
}

// Signed relative prediction error of a model return level against the
// realized maximum, scaled by how much the realized maximum moved past the
// baseline's accepted value. Clamped to [-9.99, +9.99]; a zero denominator
// takes the sign of the numerator, with a zero numerator counting as
// negative.
inline double prediction_error(double return_level_value, double t_n, double t_b) {
  double num = return_level_value - t_n;
  double den = t_n - t_b;
  if (den == 0.0) return num > 0.0 ? 9.99 : -9.99;
  double err = num / den;
  if (err > 9.99) return 9.99;
  if (err < -9.99) return -9.99;
  return err;
}

// One dataset's comparison line: where the sequential baseline stopped and
// how the model's return levels fared at each horizon.
struct comparison_row {
  std::string dataset;
  std::int64_t b = 0;
  double t_b = 0.0;
  std::vector<double> return_levels;  // aligned with the horizon grid
  std::vector<double> errors;         // aligned with the horizon grid
};

inline void write_comparison_csv(const std::filesystem::path& path,
                                 std::span<const comparison_row> rows,
                                 std::span<const std::int64_t> horizons) {
  std::ofstream out(path);
  if (!out)
    throw file_not_found("write_comparison_csv: cannot open " + path.string() +
                         " for writing");
  out << "dataset,b,T_b";
  for (auto m : horizons) out << ",RL_" << m;
  for (auto m : horizons) out << ",Error_" << m;
  out << "\n";
  for (const auto& row : rows) {
    out << row.dataset << "," << row.b << "," << detail::format_double(row.t_b);
    for (double v : row.return_levels) out << "," << detail::format_double(v);
    for (double v : row.errors) out << "," << detail::format_double(v);
    out << "\n";
  }
}

}  // namespace evtail
