#pragma once

#include <memory>
#include <vector>

#include "regime/estimation.hpp"

namespace regime {

// Quadratic B-spline on the uniform knots v_k = k*delta, supported on
// [v_k, v_k+3). Zero outside the support; the family sums to 1 everywhere.
double bspline_basis(long k, double y, double delta);

// C1 quadratic-spline smoothing of a step rate estimate: coefficients are
// the step values sampled at the knots, held constant below 0 and above the
// per-pair cutoff T1 (location of the largest step value on
// [pricing_horizon, tau]). Evaluation, cumulative hazards and thinning
// bounds are exact piecewise operations on the quadratic pieces.
class SmoothedRate final : public RateFunction {
 public:
  SmoothedRate(const StepRateEstimate& estimate, double pricing_horizon);

  const EstimationGrid& grid() const { return grid_; }
  double pricing_horizon() const { return pricing_horizon_; }
  // Extension cutoff and constant tail value of the pair (i, j).
  double extension_cutoff(int i, int j) const;
  double tail_value(int i, int j) const {
    const auto& p = pairs_[pair_index(num_states_, i, j)];
    return p.cells[p.argmax_cell];
  }
  double tail_total_rate(int i) const { return tail_[i]; }
  // First knot index from which every pair's spline is constant.
  long constant_from_knot() const { return table_end_; }
  // Spline coefficient of basis function B_k for the pair (i, j); the
  // knot sample feeding B_k sits at v_{k+2}.
  double coefficient(int i, int j, long k) const;

  int num_states() const override { return num_states_; }
  RateKind kind() const override { return RateKind::Spline; }
  double rate(int i, int j, double y) const override;
  double total_rate(int i, double y) const override;
  double cumulative_hazard(int i, double y) const override;
  double total_rate_bound(int i, double lo, double hi) const override;
  double next_breakpoint(int i, double y) const override;
  std::vector<double> breakpoints(double lo, double hi) const override;

 private:
  struct PairData {
    std::vector<double> cells;  // step values per cell
    long argmax_cell = 0;       // first maximizing cell on [T, tau]
  };
  double knot_value(int pair, long n) const;  // extended step at v_n

  EstimationGrid grid_;
  int num_states_ = 0;
  double pricing_horizon_ = 0.0;
  std::vector<PairData> pairs_;
  long table_end_ = 0;  // knot index from which all coefficients are constant
  std::vector<std::vector<double>> state_coeff_;  // [state][knot 0..table_end]
  std::vector<std::vector<double>> cum_;  // [state][knot], exact integrals
  std::vector<double> tail_;              // [state] constant tail rate
};

std::shared_ptr<const SmoothedRate> smooth(const StepRateEstimate& estimate,
                                           double pricing_horizon);

// Dense-sampled sup of |step - spline| over pairs on [0, y_max], together
// with twice the step modulus of continuity at lag delta computed from the
// knot samples that influence [0, y_max]. Throws if the distance ever
// exceeds the bound beyond rounding.
struct SplineStepDistance {
  double distance = 0.0;
  double bound = 0.0;
};

SplineStepDistance sup_distance_to_step(const SmoothedRate& smoothed,
                                        const StepRateEstimate& estimate,
                                        double y_max);

// Existence conditions for pricing with a smoothed rate: C1 smoothness,
// unbounded cumulative hazards, and irreducibility of the embedded chain
// p_hat recovered from the smoothed kernel.
struct TbaDiagnostics {
  bool c1 = false;
  std::vector<bool> positive_tail;
  bool irreducible = false;
  std::vector<std::vector<double>> p_hat;
  std::vector<double> row_sums;

  bool all_pass() const {
    if (!c1 || !irreducible) return false;
    for (bool t : positive_tail)
      if (!t) return false;
    return true;
  }
};

TbaDiagnostics validate_tba_conditions(const SmoothedRate& smoothed);

}  // namespace regime
