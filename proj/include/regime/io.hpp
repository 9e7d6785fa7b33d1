#pragma once

#include <memory>
#include <string>

#include "regime/estimation.hpp"
#include "regime/experiment.hpp"
#include "regime/pricing.hpp"
#include "regime/semi_markov.hpp"
#include "regime/spline.hpp"

namespace regime {

// Floating-point output everywhere uses nine significant digits so files
// diff cleanly across implementations.
std::string format_g9(double v);

// History CSV: `# tau=<value>` metadata line, header
// `index,state,holding_time`, one row per sojourn, footer row
// `censored,<state>,<U_tau>`. States are 1-based in every file.
void write_history_csv(const std::string& path, const CensoredHistory& h);
CensoredHistory read_history_csv(const std::string& path);

// Estimate CSV: header `i,j,k,v_k,d,v,lambda_hat`, one row per ordered pair
// and cell.
void write_estimate_csv(const std::string& path, const StepRateEstimate& e);
StepRateEstimate read_estimate_csv(const std::string& path);

// Smoothed-rate CSV on a uniform evaluation mesh: `i,j,y,lambda_tilde`.
void write_smoothed_csv(const std::string& path, const SmoothedRate& s,
                        double y_max, int points);

// Diagnostics JSON: {c1, tail, irreducible, p_hat, row_sums}.
void write_diagnostics_json(const std::string& path, const TbaDiagnostics& d);

// Surface CSV: `t,s,i,y,phi` over every retained lattice point.
void write_surface_csv(const std::string& path, const PriceSurface& s);

// Report CSV: `kind,tau,state,sup_error,l2_error,trend_a,trend_b` (trend
// columns carry the sup-norm fit of the row's series; empty when no fit).
void write_report_csv(const std::string& path, const ConvergenceReport& r);

// Per-pair estimate-vs-projection norms: `tau,i,j,sup_error,l2_error`.
void write_pair_errors_csv(const std::string& path,
                           const ConvergenceReport& r);

}  // namespace regime
