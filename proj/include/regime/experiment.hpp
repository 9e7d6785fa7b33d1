#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "regime/estimation.hpp"
#include "regime/pricing.hpp"
#include "regime/semi_markov.hpp"
#include "regime/spline.hpp"

namespace regime {

// Everything one convergence sweep needs: the ground-truth model, the
// market, the horizons to estimate at, per-horizon seeds and the evaluation
// windows ([0, norm_horizon] for rates, [spot_lo, spot_hi] for prices).
struct ExperimentPlan {
  std::shared_ptr<const SemiMarkovModel> model;
  MarketParams market;
  std::vector<double> tau_schedule;
  double alpha = 0.3;
  std::vector<std::uint64_t> seeds;  // one per tau
  double norm_horizon = 4.0;
  double spot_lo = 0.0;
  double spot_hi = 5.0;
  SolverConfig solver;
  bool nested = false;  // one long history truncated at each tau
  int threads = 1;

  void validate() const;
};

struct ConvergenceRow {
  std::string kind;  // rate_vs_projection | rate_vs_true | smoothed_vs_true | price
  double tau = 0.0;
  int state = 0;  // 0 = aggregated over states/pairs; 1..theta for price rows
  double sup_error = 0.0;
  double l2_error = 0.0;
};

struct TrendFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual = 0.0;
};

struct PairErrorRow {
  double tau = 0.0;
  int i = 0, j = 0;  // 1-based states
  double sup_error = 0.0;
  double l2_error = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  // Keyed by "<kind>/<state>"; fitted against error = a + b ln(tau).
  std::map<std::string, TrendFit> sup_trends;
  std::map<std::string, TrendFit> l2_trends;
  std::vector<PairErrorRow> pair_rows;  // per-pair rate_vs_projection norms
  std::vector<std::string> warnings;

  static std::string trend_key(const std::string& kind, int state) {
    return kind + "/" + std::to_string(state);
  }
  const TrendFit* sup_trend(const std::string& kind, int state) const;
  const TrendFit* l2_trend(const std::string& kind, int state) const;
};

// Least squares of error against (1, ln tau). Throws on fewer than two
// distinct tau values.
TrendFit fit_log_trend(const std::vector<std::pair<double, double>>& rows);

// Figure-1 style sweep: per tau, estimate from a fresh (or truncated)
// history, then record sup/L2 norms of estimate-vs-projection,
// estimate-vs-true and smoothed-vs-true on [0, norm_horizon].
ConvergenceReport run_rate_convergence(const ExperimentPlan& plan);

struct PriceErrorRow {
  int state = 0;  // 1-based
  double sup_error = 0.0;
  double l2_error = 0.0;
  bool tba_ok = true;
};

// Difference at t = 0, y = 0 between the surface solved with the true rate
// and the one solved with the smoothed estimate from a seeded history at
// horizon tau, on the same grid; sup/L2 per state over the spot window.
// Passing a presolved true surface skips re-solving it.
std::vector<PriceErrorRow> price_error(const ExperimentPlan& plan, double tau,
                                       std::uint64_t seed,
                                       const PriceSurface* true_surface =
                                           nullptr);

// Figure-2 style sweep over the whole schedule.
ConvergenceReport run_price_convergence(const ExperimentPlan& plan);

// Both sweeps, sharing seeds, merged into one report.
ConvergenceReport run_full_experiment(const ExperimentPlan& plan);

// One SVG per figure present in the report (rate_convergence.svg,
// price_convergence.svg): error-vs-tau scatter with fitted log-trend lines.
// Byte-deterministic for a fixed report. Returns the files written.
std::vector<std::string> emit_plots(const ConvergenceReport& report,
                                    const std::string& directory);

}  // namespace regime
