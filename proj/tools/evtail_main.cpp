// evtail command line tool.
//
// Subcommands: fit, predict, compare, simulate, diagnose. Exit codes:
// 0 on success, 1 for input or environment problems, 2 for statistical
// failures (no valid threshold, invalid fit, level out of reach). Every
// command is deterministic given its flags, inputs, and seed.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evtail/evtail.hpp"

namespace {

using evtail::detail::format_sig;

std::string join_command(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

evtail::threshold_policy parse_policy(const std::string& text) {
  if (text == "auto") return evtail::threshold_policy::auto_scan();
  auto parse_tail_number = [&](std::size_t prefix_len, const char* what) {
    try {
      std::size_t used = 0;
      double v = std::stod(text.substr(prefix_len), &used);
      if (prefix_len + used != text.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw evtail::invalid_parameter(std::string("--threshold ") + what +
                                      " wants a number, got '" + text + "'");
    }
  };
  if (text.rfind("fixed:", 0) == 0)
    return evtail::threshold_policy::fixed(parse_tail_number(6, "fixed:<u>"));
  if (text.rfind("sigma:", 0) == 0)
    return evtail::threshold_policy::sigma(parse_tail_number(6, "sigma:<k>"));
  throw evtail::invalid_parameter("--threshold must be auto, fixed:<u>, or sigma:<k>");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::int64_t> parse_horizons(const std::string& text) {
  std::vector<std::int64_t> horizons;
  for (const auto& part : split(text, ',')) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(part, &used);
      if (used != part.size() || v < 1) throw std::invalid_argument("bad horizon");
      horizons.push_back(v);
    } catch (const std::exception&) {
      throw evtail::invalid_parameter("--horizons wants positive integers, got '" + part + "'");
    }
  }
  if (horizons.empty()) throw evtail::invalid_parameter("--horizons is empty");
  return horizons;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw evtail::invalid_parameter(std::string(flag) + " wants numbers, got '" + part + "'");
    }
  }
  return values;
}

std::vector<evtail::interval> parse_ranges(const std::string& text) {
  std::vector<evtail::interval> ranges;
  for (const auto& part : split(text, ',')) {
    auto pieces = split(part, ':');
    if (pieces.size() != 2)
      throw evtail::invalid_parameter("--init-range wants lo:hi pairs, got '" + part + "'");
    try {
      ranges.push_back({std::stod(pieces[0]), std::stod(pieces[1])});
    } catch (const std::exception&) {
      throw evtail::invalid_parameter("--init-range wants numbers, got '" + part + "'");
    }
  }
  return ranges;
}

// Derives sibling output names from the report path, report.json giving
// report.qq.csv and friends.
std::string output_base(const std::filesystem::path& out) {
  std::filesystem::path base = out;
  if (base.extension() == ".json") base.replace_extension();
  return base.string();
}

struct common_options {
  std::string input;
  std::string out;
  std::string threshold = "auto";
  std::string horizons = "500,1000,2000,5000,10000";
  std::string column = "0";
  std::string unit;
  double confidence = 0.95;
};

void add_trace_options(CLI::App* cmd, common_options& o) {
  cmd->add_option("--input", o.input, "input trace CSV")->required();
  cmd->add_option("--column", o.column, "trace column, by index or header name");
  cmd->add_option("--unit", o.unit, "unit label carried into outputs");
  cmd->add_option("--threshold", o.threshold,
                  "threshold policy: auto, fixed:<u>, or sigma:<k>");
}

void print_curve(const evtail::return_level_curve& curve, const evtail::gpd_fit& fit) {
  std::cout << "return levels (confidence " << format_sig(curve.confidence, 4) << "):\n";
  for (const auto& pt : curve.points) {
    double p = evtail::exceedance_probability(fit, pt.level, 1);
    std::cout << "  m=" << pt.m << "  level " << format_sig(pt.level, 4) << "  ["
              << format_sig(pt.ci_low, 4) << ", " << format_sig(pt.ci_high, 4)
              << "]  next-query " << evtail::format_probability_percent(p) << "\n";
  }
}

int run_fit(const common_options& o, const std::optional<std::size_t>& block_size,
            std::size_t bins, const std::string& command) {
  auto trace = evtail::load_trace(o.input, evtail::column_ref::parse(o.column), o.unit);
  evtail::analysis_options opts;
  opts.policy = parse_policy(o.threshold);
  opts.horizons = parse_horizons(o.horizons);
  opts.confidence = o.confidence;
  opts.block_size = block_size;
  opts.density_bins = bins;

  auto result = evtail::analyze_trace(trace, opts);

  std::string base = output_base(o.out);
  evtail::report_context ctx;
  ctx.command = command;
  ctx.input = o.input;
  ctx.qq_file = base + ".qq.csv";
  ctx.density_file = base + ".density.csv";
  ctx.return_level_file = base + ".returnlevel.csv";

  evtail::write_qq_csv(ctx.qq_file, result.qq);
  evtail::write_density_csv(ctx.density_file, result.density);
  evtail::write_return_level_csv(ctx.return_level_file, result.curve);
  evtail::write_json(o.out, evtail::build_report(trace, result, opts, ctx));

  const auto& fit = result.selection.fit;
  std::cout << "trace: " << result.summary.count << " samples, mean "
            << format_sig(result.summary.mean, 4) << ", sd "
            << format_sig(result.summary.std_dev, 4) << ", max "
            << format_sig(result.summary.max, 4) << "\n";
  std::cout << "threshold u = " << format_sig(result.selection.u, 4) << " ("
            << result.selection.trail.size() << " candidate"
            << (result.selection.trail.size() == 1 ? "" : "s") << ", " << fit.n_exceed
            << " exceedances)\n";
  if (fit.has_se) {
    std::cout << "fit: sigma_hat " << evtail::format_value_pm(fit.sigma_hat, fit.se_sigma)
              << ", xi " << evtail::format_value_pm(fit.xi, fit.se_xi) << "\n";
  } else {
    std::cout << "fit: sigma_hat " << format_sig(fit.sigma_hat, 4) << ", xi "
              << format_sig(fit.xi, 4) << " (standard errors unavailable)\n";
  }
  std::cout << "tail type: " << to_string(result.type.kind) << " ("
            << to_string(result.type.note) << ")\n";
  if (result.gev.has_value()) {
    std::cout << "gev (block " << result.gev->block_size << "): mu "
              << format_sig(result.gev->mu, 4) << ", sigma " << format_sig(result.gev->sigma, 4)
              << ", xi " << format_sig(result.gev->xi, 4) << "\n";
  }
  std::cout << "extrapolation bound: " << format_sig(result.extrapolation, 4) << "\n";
  print_curve(result.curve, fit);
  std::cout << "report: " << o.out << "\n";
  return 0;
}

int run_predict(const std::string& input, const std::string& horizons_text,
                const std::optional<double>& level, double confidence,
                const std::string& out) {
  auto j = evtail::read_json(input);
  if (!j.contains("fit"))
    throw evtail::parse_error(0, "report has no 'fit' object: " + input);
  auto fit = j.at("fit").get<evtail::gpd_fit>();

  auto horizons = parse_horizons(horizons_text);
  auto curve = evtail::compute_return_levels(fit, horizons, confidence);
  if (!out.empty()) evtail::write_return_level_csv(out, curve);
  print_curve(curve, fit);

  if (level.has_value()) {
    auto rp = evtail::return_period(fit, *level);
    std::cout << "level " << format_sig(*level, 4) << ": return period "
              << format_sig(rp.period, 4) << " queries, next-query likelihood "
              << evtail::format_probability_percent(rp.next_probability) << "\n";
    std::cout << "exceedance within next s queries:";
    for (std::int64_t s : {std::int64_t{1}, std::int64_t{10}, std::int64_t{100},
                           std::int64_t{1000}}) {
      double p = evtail::exceedance_probability(fit, *level, s);
      std::cout << "  s=" << s << ": " << evtail::format_probability_percent(p);
    }
    std::cout << "\n";
  }
  if (!out.empty()) std::cout << "curve: " << out << "\n";
  return 0;
}

int run_compare(const common_options& o, double bayes_factor, const std::string& label) {
  auto trace = evtail::load_trace(o.input, evtail::column_ref::parse(o.column), o.unit);
  auto horizons = parse_horizons(o.horizons);
  auto policy = parse_policy(o.threshold);

  std::int64_t k = evtail::jeffreys_required_samples(bayes_factor, o.confidence);
  if (k < 1)
    throw evtail::invalid_parameter("compare: Bayes factor and confidence give K = 0");
  auto st = evtail::run_monitor(trace, k);
  if (!st.accepted)
    throw evtail::stat_error("compare: sequential monitor never accepted within " +
                             std::to_string(trace.size()) + " samples (K = " +
                             std::to_string(k) + ")");

  std::vector<double> prefix(trace.samples().begin(),
                             trace.samples().begin() + static_cast<std::ptrdiff_t>(st.b));
  evtail::timing_trace prefix_trace(std::move(prefix), trace.unit(), trace.source());
  auto selection = evtail::auto_select_threshold(prefix_trace, policy);

  evtail::comparison_row row;
  row.dataset = label.empty() ? std::filesystem::path(o.input).stem().string() : label;
  row.b = st.b;
  row.t_b = st.t_b;
  for (auto m : horizons) {
    double rl = evtail::return_level(selection.fit, m);
    // Horizons beyond the trace fall back to the full-trace maximum, the
    // same convention the published error columns use for short datasets.
    auto upto = std::min(static_cast<std::size_t>(m), trace.size());
    double t_m = evtail::max_prefix(trace, upto);
    row.return_levels.push_back(rl);
    row.errors.push_back(evtail::prediction_error(rl, t_m, st.t_b));
  }
  std::vector<evtail::comparison_row> rows{row};
  evtail::write_comparison_csv(o.out, rows, horizons);

  auto bound = evtail::rule_of_three(k);
  std::cout << "monitor: K = " << k << ", accepted at b = " << st.b << " with T_b = "
            << format_sig(st.t_b, 4) << "\n";
  std::cout << "rule of three: exceedance probability in [0, " << format_sig(bound.second, 4)
            << "]\n";
  std::cout << "fit threshold u = " << format_sig(selection.u, 4) << "\n";
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    std::cout << "  m=" << horizons[i] << "  RL " << format_sig(row.return_levels[i], 4)
              << "  error " << format_sig(row.errors[i], 3) << "\n";
  }
  std::cout << "table: " << o.out << "\n";
  return 0;
}

int run_simulate(const std::string& system, std::size_t runs, std::uint64_t seed,
                 const std::string& out, const std::optional<double>& horizon,
                 const std::optional<double>& dt, const std::optional<double>& dist_range,
                 const std::optional<double>& dist_hold, const std::string& settle_text,
                 const std::string& init_text, const std::string& gains_text) {
  evtail::sim_config cfg;
  if (system == "pendulum") {
    cfg = evtail::pendulum_config();
  } else if (system == "tora") {
    cfg = evtail::tora_config();
  } else {
    throw evtail::invalid_parameter("--system must be pendulum or tora");
  }
  if (horizon) cfg.horizon = *horizon;
  if (dt) cfg.dt = *dt;
  if (dist_range) cfg.disturbance_range = *dist_range;
  if (dist_hold) cfg.disturbance_hold = *dist_hold;
  if (!settle_text.empty())
    cfg.settle_halfwidth = parse_double_list(settle_text, "--settle-halfwidth");
  if (!init_text.empty()) cfg.init_ranges = parse_ranges(init_text);
  if (!gains_text.empty()) cfg.controller_gains = parse_double_list(gains_text, "--gains");

  auto campaign = evtail::run_campaign(cfg, runs, seed);
  evtail::save_trace(out, campaign.trace);
  std::filesystem::path meta = out;
  meta.replace_extension(".meta.json");
  evtail::write_campaign_metadata(meta, campaign);

  auto summary = evtail::summarize(campaign.trace);
  std::cout << "campaign: " << runs << " runs, " << campaign.trace.size() << " settled, "
            << campaign.did_not_settle << " did not settle\n";
  std::cout << "settle time: mean " << format_sig(summary.mean, 4) << ", max "
            << format_sig(summary.max, 4) << "\n";
  std::cout << "trace: " << out << "\nmetadata: " << meta.string() << "\n";
  return 0;
}

int run_diagnose(const common_options& o, std::size_t grid_points, std::size_t bins) {
  auto trace = evtail::load_trace(o.input, evtail::column_ref::parse(o.column), o.unit);
  auto grid = evtail::default_mrl_grid(trace, grid_points);
  auto mrl = evtail::mean_residual_life(trace, grid);
  std::string mrl_file = o.out + ".mrl.csv";
  evtail::write_mrl_csv(mrl_file, mrl);
  std::cout << "mean residual life: " << mrl.size() << " grid points, " << mrl_file << "\n";

  try {
    auto selection = evtail::auto_select_threshold(trace, parse_policy(o.threshold));
    auto excesses = evtail::extract_excesses(trace, selection.u);
    auto qq = evtail::qq_points(selection.fit, excesses);
    auto density = evtail::density_overlay(selection.fit, excesses, bins);
    evtail::write_qq_csv(o.out + ".qq.csv", qq);
    evtail::write_density_csv(o.out + ".density.csv", density);
    auto type = evtail::classify_tail(selection.fit.xi);
    std::cout << "threshold u = " << format_sig(selection.u, 4) << ", tail "
              << to_string(type.kind) << " (" << to_string(type.note) << ")\n";
    std::cout << "extrapolation bound: "
              << format_sig(evtail::extrapolation_bound(selection.fit, qq), 4) << "\n";
    std::cout << "qq/density: " << o.out << ".qq.csv, " << o.out << ".density.csv\n";
  } catch (const evtail::stat_error& e) {
    std::cout << "no valid fit for qq/density overlays: " << e.what() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extreme-tail analysis of convergence-time traces"};
  app.set_version_flag("--version", evtail::version_string);
  app.require_subcommand(1);

  common_options fit_o, compare_o, diag_o;
  fit_o.out = "report.json";
  compare_o.out = "compare.csv";
  diag_o.out = "diagnose";

  // fit
  auto* cmd_fit = app.add_subcommand("fit", "fit a tail model and write a JSON report");
  add_trace_options(cmd_fit, fit_o);
  cmd_fit->add_option("--out", fit_o.out, "report path (siblings get .qq/.density/.returnlevel)");
  cmd_fit->add_option("--horizons", fit_o.horizons, "comma-separated return-level horizons");
  cmd_fit->add_option("--confidence", fit_o.confidence, "confidence for intervals");
  std::optional<std::size_t> block_size;
  cmd_fit->add_option("--block-size", block_size, "include equivalent GEV parameters");
  std::size_t fit_bins = 30;
  cmd_fit->add_option("--bins", fit_bins, "histogram bins for the density overlay");

  // predict
  auto* cmd_predict = app.add_subcommand("predict", "query return levels from a report");
  std::string predict_input, predict_out;
  std::string predict_horizons = "500,1000,2000,5000,10000";
  std::optional<double> predict_level;
  double predict_confidence = 0.95;
  cmd_predict->add_option("--input", predict_input, "report JSON from fit")->required();
  cmd_predict->add_option("--horizons", predict_horizons, "comma-separated horizons");
  cmd_predict->add_option("--level", predict_level, "level for return-period queries");
  cmd_predict->add_option("--confidence", predict_confidence, "confidence for intervals");
  cmd_predict->add_option("--out", predict_out, "optional return-level CSV");

  // compare
  auto* cmd_compare =
      app.add_subcommand("compare", "run the sequential baseline and compare predictions");
  add_trace_options(cmd_compare, compare_o);
  cmd_compare->add_option("--out", compare_o.out, "comparison CSV path");
  cmd_compare->add_option("--horizons", compare_o.horizons, "comma-separated horizons");
  cmd_compare->add_option("--confidence", compare_o.confidence, "theta for the monitor");
  double bayes_factor = 100.0;
  cmd_compare->add_option("--bayes-factor", bayes_factor, "Bayes factor threshold B");
  std::string compare_label;
  cmd_compare->add_option("--label", compare_label, "dataset label in the CSV");

  // simulate
  auto* cmd_simulate = app.add_subcommand("simulate", "run a workload campaign");
  std::string sim_system, sim_out = "trace.csv";
  std::size_t sim_runs = 1000;
  std::uint64_t sim_seed = 0;
  std::optional<double> sim_horizon, sim_dt, sim_range, sim_hold;
  std::string sim_settle, sim_init, sim_gains;
  cmd_simulate->add_option("--system", sim_system, "pendulum or tora")->required();
  cmd_simulate->add_option("--runs", sim_runs, "number of independent runs");
  cmd_simulate->add_option("--seed", sim_seed, "campaign base seed")->required();
  cmd_simulate->add_option("--out", sim_out, "trace CSV path (metadata goes to .meta.json)");
  cmd_simulate->add_option("--horizon", sim_horizon, "override simulated time span");
  cmd_simulate->add_option("--dt", sim_dt, "override Euler step");
  cmd_simulate->add_option("--disturbance-range", sim_range, "override disturbance range");
  cmd_simulate->add_option("--disturbance-hold", sim_hold, "override disturbance hold time");
  cmd_simulate->add_option("--settle-halfwidth", sim_settle, "per-dimension box, comma list");
  cmd_simulate->add_option("--init-range", sim_init, "per-dimension lo:hi pairs, comma list");
  cmd_simulate->add_option("--gains", sim_gains, "controller gains, comma list");

  // diagnose
  auto* cmd_diagnose =
      app.add_subcommand("diagnose", "threshold diagnostics without committing to a fit");
  add_trace_options(cmd_diagnose, diag_o);
  cmd_diagnose->add_option("--out", diag_o.out, "output prefix for diagnostic CSVs");
  std::size_t diag_grid = 80, diag_bins = 30;
  cmd_diagnose->add_option("--grid-points", diag_grid, "mean-residual-life grid size");
  cmd_diagnose->add_option("--bins", diag_bins, "histogram bins for the density overlay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (cmd_fit->parsed()) return run_fit(fit_o, block_size, fit_bins, join_command(argc, argv));
    if (cmd_predict->parsed())
      return run_predict(predict_input, predict_horizons, predict_level, predict_confidence,
                         predict_out);
    if (cmd_compare->parsed()) return run_compare(compare_o, bayes_factor, compare_label);
    if (cmd_simulate->parsed())
      return run_simulate(sim_system, sim_runs, sim_seed, sim_out, sim_horizon, sim_dt,
                          sim_range, sim_hold, sim_settle, sim_init, sim_gains);
    if (cmd_diagnose->parsed()) return run_diagnose(diag_o, diag_grid, diag_bins);
  } catch (const evtail::stat_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const evtail::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
