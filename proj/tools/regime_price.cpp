// regime_price: batch CLI for semi-Markov regime estimation and option
// pricing. Subcommands: simulate | estimate | price | experiment.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "regime/config.hpp"
#include "regime/estimation.hpp"
#include "regime/experiment.hpp"
#include "regime/io.hpp"
#include "regime/pricing.hpp"
#include "regime/semi_markov.hpp"
#include "regime/spline.hpp"
#include "regime/threading.hpp"

namespace fs = std::filesystem;
using namespace regime;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0 = default_threads()
  bool force = false;
  std::string out_override;
};

std::string output_dir(const RunConfig& config, const GlobalOptions& opts) {
  return opts.out_override.empty() ? config.output_dir : opts.out_override;
}

// Refuses to clobber existing outputs unless --force was given, then makes
// sure the directory exists.
void prepare_outputs(const std::string& dir,
                     const std::vector<std::string>& files, bool force) {
  if (!force)
    for (const auto& f : files)
      if (fs::exists(fs::path(dir) / f))
        throw ConfigError("output file '" + (fs::path(dir) / f).string() +
                          "' exists; pass --force to overwrite");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir);
}

const SemiMarkovModel& require_model(const RunConfig& config) {
  if (!config.model)
    throw ConfigError("this command needs a 'model' section in the config");
  return *config.model;
}

const MarketParams& require_market(const RunConfig& config) {
  if (!config.market)
    throw ConfigError("this command needs a 'market' section in the config");
  return *config.market;
}

std::uint64_t effective_seed(const RunConfig& config,
                             const GlobalOptions& opts) {
  return opts.seed ? *opts.seed : config.estimation.seed;
}

double require_tau(const RunConfig& config) {
  if (!(config.estimation.tau > 0.0))
    throw ConfigError("estimation.tau must be a positive horizon");
  return config.estimation.tau;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw ConfigError("estimation.alpha must lie in (0, 1/2)");
}

int cmd_simulate(const RunConfig& config, const GlobalOptions& opts) {
  const auto& model = require_model(config);
  const double tau = require_tau(config);
  const std::string dir = output_dir(config, opts);
  prepare_outputs(dir, {"history.csv"}, opts.force);
  const auto history =
      simulate_history(model, tau, effective_seed(config, opts));
  write_history_csv((fs::path(dir) / "history.csv").string(), history);
  std::cout << "wrote " << (fs::path(dir) / "history.csv").string() << " ("
            << history.num_transitions() << " transitions)\n";
  return 0;
}

int cmd_estimate(const RunConfig& config, const GlobalOptions& opts,
                 const std::string& history_file) {
  check_alpha(config.estimation.alpha);
  if (!fs::exists(history_file))
    throw ConfigError("history file '" + history_file + "' does not exist");
  CensoredHistory history;
  try {
    history = read_history_csv(history_file);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot parse history: ") + e.what());
  }
  int num_states = 0;
  for (int s : history.states) num_states = std::max(num_states, s + 1);
  if (config.model) num_states = std::max(num_states, config.model->num_states());

  const std::string dir = output_dir(config, opts);
  prepare_outputs(dir, {"estimate.csv", "smoothed.csv", "tba_diagnostics.json"},
                  opts.force);

  const auto grid = build_grid(history.horizon, config.estimation.alpha);
  const auto estimate = estimate_rate(history, grid, num_states);
  const double horizon = config.estimation.pricing_horizon;
  if (!(horizon > 0.0) || horizon > history.horizon)
    throw ConfigError(
        "estimation.pricing_horizon must lie in (0, tau] for smoothing");
  const auto smoothed = smooth(estimate, horizon);
  const auto diag = validate_tba_conditions(*smoothed);

  write_estimate_csv((fs::path(dir) / "estimate.csv").string(), estimate);
  write_smoothed_csv((fs::path(dir) / "smoothed.csv").string(), *smoothed,
                     horizon, config.estimation.export_points);
  write_diagnostics_json((fs::path(dir) / "tba_diagnostics.json").string(),
                         diag);
  std::cout << "wrote estimate.csv, smoothed.csv, tba_diagnostics.json in "
            << dir << "\n";
  return 0;
}

int cmd_price(const RunConfig& config, const GlobalOptions& opts,
              const std::string& rate_source, const std::string& rate_file) {
  const auto& market = require_market(config);
  const std::string dir = output_dir(config, opts);
  prepare_outputs(dir, {"surface.csv"}, opts.force);

  std::shared_ptr<const RateFunction> rate;
  if (rate_source == "true") {
    if (!config.model)
      throw ConfigError("--rate true needs a 'model' section in the config");
    rate = hazard_from_model(config.model);
  } else if (rate_source == "estimated") {
    if (rate_file.empty())
      throw ConfigError("--rate estimated needs --rate-file <estimate.csv>");
    if (!fs::exists(rate_file))
      throw ConfigError("rate file '" + rate_file + "' does not exist");
    StepRateEstimate estimate;
    try {
      estimate = read_estimate_csv(rate_file);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cannot parse estimate: ") + e.what());
    }
    if (estimate.num_states() != market.num_states())
      throw ConfigError("estimate and market disagree on the state count");
    if (estimate.grid().horizon < market.maturity)
      throw ConfigError("estimate horizon is shorter than the maturity");
    rate = smooth(estimate, market.maturity);
  } else {
    throw ConfigError("--rate must be 'true' or 'estimated'");
  }

  const auto grid = PriceGrid::build(market, config.solver);
  const auto surface = solve_pde(market, *rate, grid);
  write_surface_csv((fs::path(dir) / "surface.csv").string(), surface);
  std::cout << "wrote " << (fs::path(dir) / "surface.csv").string()
            << "  phi(0, spot, 1, 0) = "
            << format_g9(price_at(surface, 0.0, market.spot, 0, 0.0)) << "\n";
  return 0;
}

int cmd_experiment(const RunConfig& config, const GlobalOptions& opts) {
  const auto& model = require_model(config);
  (void)model;
  const auto& market = require_market(config);
  check_alpha(config.estimation.alpha);
  const std::string dir = output_dir(config, opts);
  prepare_outputs(dir,
                  {"report.csv", "rate_error_pairs.csv",
                   "rate_convergence.svg", "price_convergence.svg"},
                  opts.force);

  ExperimentPlan plan;
  plan.model = config.model;
  plan.market = market;
  plan.tau_schedule = config.experiment.tau_schedule;
  plan.alpha = config.estimation.alpha;
  plan.norm_horizon = config.experiment.norm_horizon;
  plan.spot_lo = config.experiment.spot_lo;
  plan.spot_hi = config.experiment.spot_hi;
  plan.solver = config.solver;
  plan.nested = config.experiment.nested;
  plan.threads = opts.threads > 0 ? opts.threads : default_threads();
  const std::uint64_t base = effective_seed(config, opts);
  plan.seeds.resize(plan.tau_schedule.size());
  for (std::size_t k = 0; k < plan.seeds.size(); ++k)
    plan.seeds[k] = derive_seed(base, k);
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto report = run_full_experiment(plan);
  write_report_csv((fs::path(dir) / "report.csv").string(), report);
  write_pair_errors_csv((fs::path(dir) / "rate_error_pairs.csv").string(),
                        report);
  emit_plots(report, dir);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  if (plan.tau_schedule.size() < 2)
    std::cerr << "warning: single-horizon schedule, no trend fitted\n";
  std::cout << "wrote report.csv, rate_error_pairs.csv and SVG plots in "
            << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Semi-Markov regime-switching call pricer: estimates age-dependent "
      "transition rates from an observed regime history, smooths them with "
      "quadratic B-splines, prices European calls through the coupled "
      "pricing system, and sweeps observation horizons to demonstrate "
      "convergence."};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON configuration file")
      ->required();
  app.add_option("--seed", opts.seed,
                 "override estimation.seed from the config");
  app.add_option("--threads", opts.threads,
                 "worker threads (default: hardware, or REGIME_PRICE_THREADS)");
  app.add_flag("--force", opts.force, "overwrite existing output files");
  app.add_option("--out", opts.out_override,
                 "output directory (default: config output_dir, else 'out')");

  auto* sim = app.add_subcommand(
      "simulate", "simulate one censored regime history -> history.csv");
  auto* est = app.add_subcommand(
      "estimate",
      "estimate and smooth rates from a history -> estimate.csv, "
      "smoothed.csv, tba_diagnostics.json");
  std::string history_file;
  est->add_option("--history", history_file, "history CSV to estimate from")
      ->required();
  auto* price = app.add_subcommand(
      "price", "solve the pricing system -> surface.csv");
  std::string rate_source = "true";
  std::string rate_file;
  price->add_option("--rate", rate_source,
                    "rate to price with: 'true' (model hazard) or "
                    "'estimated' (smoothed estimate file)");
  price->add_option("--rate-file", rate_file,
                    "estimate CSV for --rate estimated");
  auto* exp = app.add_subcommand(
      "experiment",
      "full convergence sweep -> report.csv, rate_error_pairs.csv, SVG "
      "plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig config = load_config(opts.config_path);
    if (sim->parsed()) return cmd_simulate(config, opts);
    if (est->parsed()) return cmd_estimate(config, opts, history_file);
    if (price->parsed()) return cmd_price(config, opts, rate_source, rate_file);
    if (exp->parsed()) return cmd_experiment(config, opts);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
