#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include "evtail/threshold.hpp"
#include "support.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

evtail::timing_trace exponential_trace(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = testsupport::exponential_draw(rng);
  return evtail::timing_trace(std::move(v));
}

}  // namespace

TEST_CASE("sigma-multiple thresholds come from the summary", "[threshold]") {
  evtail::timing_trace t({1.0, 2.0, 3.0, 4.0, 5.0});
  auto s = evtail::summarize(t);
  CHECK_THAT(evtail::threshold_from_sigma(s, 2.0), WithinAbs(3.0 + 2.0 * std::sqrt(2.0), 1e-12));

  evtail::timing_trace flat({2.0, 2.0, 2.0});
  auto sf = evtail::summarize(flat);
  CHECK_THROWS_AS(evtail::threshold_from_sigma(sf, 2.0), evtail::degenerate_trace);
}

TEST_CASE("excess extraction is strict and order-preserving", "[threshold]") {
  evtail::timing_trace t({1.0, 5.0, 3.0, 7.0});
  auto e = evtail::extract_excesses(t, 3.0);
  REQUIRE(e.size() == 2);
  CHECK(e[0] == 2.0);
  CHECK(e[1] == 4.0);
  CHECK(evtail::extract_excesses(t, 7.0).empty());
}

TEST_CASE("two-sigma thresholds keep the expected tail fraction", "[threshold]") {
  // Exponential(1): P(X > 2) = e^{-2}, about 1353 of 10000.
  auto t = exponential_trace(10000, 31337);
  auto count = evtail::extract_excesses(t, 2.0).size();
  CHECK(count > 1250);
  CHECK(count < 1456);
}

TEST_CASE("mean residual life is flat for exponential data", "[threshold]") {
  auto t = exponential_trace(50000, 424242);
  std::vector<double> grid{0.5, 1.0, 1.5};
  auto mrl = evtail::mean_residual_life(t, grid);
  REQUIRE(mrl.size() == 3);
  for (const auto& pt : mrl) {
    CHECK_THAT(pt.mean_excess, WithinAbs(1.0, 0.05));
    CHECK(pt.ci_halfwidth > 0.0);
    // Memorylessness keeps the truth inside the reported band.
    CHECK(std::abs(pt.mean_excess - 1.0) < 2.0 * pt.ci_halfwidth);
  }
  CHECK(mrl[0].count > mrl[2].count);
}

TEST_CASE("mean residual life slopes with the shape parameter", "[threshold]") {
  // For GPD(sigma=1, xi=1/4) the mean excess is (1 + u/4)/(3/4): slope 1/3,
  // intercept 4/3.
  std::mt19937_64 rng(90210);
  std::vector<double> v(100000);
  for (auto& x : v) x = testsupport::gpd_draw(rng, 1.0, 0.25);
  evtail::timing_trace t(std::move(v));
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.2 * i);
  auto mrl = evtail::mean_residual_life(t, grid);
  REQUIRE(mrl.size() == grid.size());

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& pt : mrl) {
    sx += pt.u;
    sy += pt.mean_excess;
    sxx += pt.u * pt.u;
    sxy += pt.u * pt.mean_excess;
  }
  double n = static_cast<double>(mrl.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  CHECK_THAT(slope, WithinAbs(1.0 / 3.0, 0.07));
  CHECK_THAT(intercept, WithinAbs(4.0 / 3.0, 0.05));
}

TEST_CASE("default grid spans mean to third-largest", "[threshold]") {
  auto t = exponential_trace(1000, 5);
  auto grid = evtail::default_mrl_grid(t, 80);
  REQUIRE(grid.size() == 80);
  auto s = evtail::summarize(t);
  CHECK_THAT(grid.front(), WithinRel(s.mean, 1e-12));
  auto sorted = t.samples();
  std::sort(sorted.begin(), sorted.end());
  CHECK_THAT(grid.back(), WithinRel(sorted[sorted.size() - 3], 1e-12));
  CHECK(std::is_sorted(grid.begin(), grid.end()));

  // Grid points beyond the data are dropped rather than reported on one point.
  std::vector<double> past_end{s.max + 1.0};
  CHECK(evtail::mean_residual_life(t, past_end).empty());
}

TEST_CASE("mrl csv has the documented header", "[threshold]") {
  auto t = exponential_trace(500, 8);
  auto mrl = evtail::mean_residual_life(t, evtail::default_mrl_grid(t, 10));
  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "evtail_tests" / "mrl.csv").string();
  fs::create_directories(fs::path(path).parent_path());
  evtail::write_mrl_csv(path, mrl);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "u,mean_excess,count,ci_halfwidth");
}

TEST_CASE("policy factories validate their inputs", "[threshold]") {
  auto t = exponential_trace(100, 3);
  CHECK_THROWS_AS(
      evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan(1.0, 2.0)),
      evtail::invalid_parameter);
  CHECK_THROWS_AS(
      evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan(2.0, 1.0, 0.0)),
      evtail::invalid_parameter);
  CHECK_THROWS_AS(
      evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan(2.0, 1.0, 0.5)),
      evtail::invalid_parameter);
}

TEST_CASE("fixed and sigma policies test a single candidate", "[threshold]") {
  auto t = exponential_trace(5000, 606);
  auto s = evtail::summarize(t);

  auto fixed = evtail::auto_select_threshold(t, evtail::threshold_policy::fixed(1.5));
  CHECK(fixed.u == 1.5);
  CHECK(fixed.trail.size() == 1);
  CHECK(fixed.trail[0].accepted);
  CHECK(fixed.fit.n_exceed == evtail::extract_excesses(t, 1.5).size());

  auto sigma = evtail::auto_select_threshold(t, evtail::threshold_policy::sigma(1.5));
  CHECK_THAT(sigma.u, WithinRel(s.mean + 1.5 * s.std_dev, 1e-12));

  // A fixed threshold above the data fails immediately with a one-step trail.
  try {
    evtail::auto_select_threshold(t, evtail::threshold_policy::fixed(s.max + 1.0));
    FAIL("expected no_valid_threshold");
  } catch (const evtail::no_valid_threshold& e) {
    REQUIRE(e.trail().size() == 1);
    CHECK(e.trail()[0].note == "too few exceedances");
  }
}

TEST_CASE("auto scan accepts immediately on well-behaved tails", "[threshold]") {
  // Body plus an exact generalized Pareto tail: any threshold above the body
  // still sees a GPD, so the first candidate with enough exceedances fits.
  std::mt19937_64 rng(1234);
  std::vector<double> v;
  for (std::size_t i = 0; i < 4500; ++i) v.push_back(2.0 * testsupport::unit_uniform(rng));
  for (std::size_t i = 0; i < 1500; ++i)
    v.push_back(2.0 + testsupport::gpd_draw(rng, 0.5, 0.1));
  evtail::timing_trace t(std::move(v));
  auto s = evtail::summarize(t);

  auto sel = evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan());
  REQUIRE_FALSE(sel.trail.empty());
  CHECK_THAT(sel.trail[0].u, WithinRel(s.mean + 2.0 * s.std_dev, 1e-12));
  CHECK(sel.trail.back().accepted);
  CHECK(sel.trail.back().note == "accepted");
  CHECK(sel.u == sel.trail.back().u);
  CHECK(sel.fit.n_exceed >= evtail::min_exceedances);
  CHECK(sel.fit.n_exceed == evtail::extract_excesses(t, sel.u).size());
  CHECK_THAT(sel.fit.zeta_u,
             WithinRel(static_cast<double>(sel.fit.n_exceed) / t.size(), 1e-12));
  // The recovered shape should resemble the generating tail.
  CHECK_THAT(sel.fit.xi, WithinAbs(0.1, 0.15));
}

TEST_CASE("auto scan walks the documented geometric grid", "[threshold]") {
  auto t = exponential_trace(300, 52);
  auto s = evtail::summarize(t);
  // A validator that refuses everything forces the scan to the floor.
  auto reject_all = [](const evtail::gpd_fit&) {
    evtail::validity_verdict v;
    v.valid = false;
    v.reasons.push_back(evtail::validity_flag::shape_too_large);
    return v;
  };
  try {
    evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan(), reject_all);
    FAIL("expected no_valid_threshold");
  } catch (const evtail::no_valid_threshold& e) {
    const auto& trail = e.trail();
    REQUIRE(trail.size() > 10);
    double u0 = s.mean + 2.0 * s.std_dev;
    double floor_u = s.mean + 1.0 * s.std_dev;
    for (std::size_t i = 0; i < trail.size(); ++i) {
      CHECK_THAT(trail[i].u, WithinRel(u0 * std::pow(1.0 - 0.0005, i), 1e-9));
      CHECK_FALSE(trail[i].accepted);
      CHECK(trail[i].u >= floor_u - 1e-12);
    }
    // Every candidate with enough exceedances was rejected by the validator.
    bool saw_invalid = false;
    for (const auto& step : trail)
      if (step.note.rfind("invalid:", 0) == 0) saw_invalid = true;
    CHECK(saw_invalid);
  }
}

TEST_CASE("auto scan reports failure on tiny traces", "[threshold]") {
  evtail::timing_trace t({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan()),
                  evtail::no_valid_threshold);
}

TEST_CASE("custom validators steer the accepted threshold", "[threshold]") {
  auto t = exponential_trace(20000, 99);
  auto s = evtail::summarize(t);
  double cap = s.mean + 1.5 * s.std_dev;
  // Accept only thresholds at or below the cap, regardless of fit quality.
  auto below_cap = [&](const evtail::gpd_fit& fit) {
    evtail::validity_verdict v;
    v.valid = fit.u <= cap;
    if (!v.valid) v.reasons.push_back(evtail::validity_flag::shape_too_large);
    return v;
  };
  auto sel = evtail::auto_select_threshold(t, evtail::threshold_policy::auto_scan(), below_cap);
  CHECK(sel.u <= cap);
  CHECK(sel.trail.size() > 1);
  CHECK(sel.trail.back().accepted);
  for (std::size_t i = 0; i + 1 < sel.trail.size(); ++i) CHECK_FALSE(sel.trail[i].accepted);
}
