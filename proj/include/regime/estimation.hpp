#pragma once

#include <memory>
#include <vector>

#include "regime/semi_markov.hpp"

namespace regime {

// Regular subdivision of [0, horizon] into M = floor(tau^(1+alpha)) cells of
// width step = tau / M. Cell k is the half-open interval (v_k, v_{k+1}].
struct EstimationGrid {
  double horizon = 0.0;
  double alpha = 0.0;
  long num_cells = 0;
  double step = 0.0;

  double knot(long k) const { return static_cast<double>(k) * step; }
  // Index of the cell whose half-open interval contains y (y > 0); y == 0
  // maps to cell 0 (the estimator carries a point mass there). Clamped to
  // [0, num_cells - 1].
  long cell_of(double y) const;
};

EstimationGrid build_grid(double tau, double alpha);

// Flat index of the ordered pair (i, j), i != j, skipping the diagonal.
int pair_index(int num_states, int i, int j);
int num_pairs(int num_states);

// Step transition rate on an estimation grid: value lambda[pair][k] on cell
// k, the k = 0 value at y = 0, and constant continuation beyond the grid.
class StepRate final : public RateFunction {
 public:
  StepRate(EstimationGrid grid, int num_states,
           std::vector<std::vector<double>> values);

  const EstimationGrid& grid() const { return grid_; }
  double cell_value(int i, int j, long k) const {
    return values_[pair_index(num_states_, i, j)][k];
  }
  const std::vector<double>& pair_values(int i, int j) const {
    return values_[pair_index(num_states_, i, j)];
  }

  int num_states() const override { return num_states_; }
  RateKind kind() const override { return RateKind::Step; }
  double rate(int i, int j, double y) const override;
  double total_rate(int i, double y) const override;
  double cumulative_hazard(int i, double y) const override;
  double total_rate_bound(int i, double lo, double hi) const override;
  double next_breakpoint(int i, double y) const override;
  std::vector<double> breakpoints(double lo, double hi) const override;

 private:
  EstimationGrid grid_;
  int num_states_;
  std::vector<std::vector<double>> values_;       // [pair][cell]
  std::vector<std::vector<double>> total_;        // [state][cell]
  std::vector<std::vector<double>> total_prefix_; // [state][cell+1], integrals
};

// Transition counts and state occupancies on a grid: d[pair][k] counts jumps
// i -> j with sojourn in cell k; v[state][k] accumulates the time each
// state-i sojourn (censored one included) spent in cell k's age window.
struct CountStatistics {
  std::vector<std::vector<long long>> counts;  // [pair][cell]
  std::vector<std::vector<double>> occupancies;  // [state][cell]
};

CountStatistics count_statistics(const CensoredHistory& history,
                                 const EstimationGrid& grid, int num_states);

// The MLE step estimate lambda_hat = d/v (0 where v == 0) together with the
// statistics it came from.
struct StepRateEstimate {
  std::shared_ptr<const StepRate> rate;
  std::vector<std::vector<long long>> counts;
  std::vector<std::vector<double>> occupancies;

  const EstimationGrid& grid() const { return rate->grid(); }
  int num_states() const { return rate->num_states(); }
};

StepRateEstimate estimate_rate(const CensoredHistory& history,
                               const EstimationGrid& grid, int num_states);

// Left-endpoint projection of a rate onto the grid: cell k takes the value
// lambda_ij(v_k). Counts and occupancies are zero.
StepRateEstimate project_true_rate(const RateFunction& rate,
                                   const EstimationGrid& grid);

// Sup and L2 distance between two rate functions on [0, y_max], taken on the
// pairwise max of |a - b| over ordered pairs. The sample contains `samples`
// uniform points plus every representation knot in range and 20 interior
// points per knot interval, so steps on a shared grid are measured exactly.
struct ErrorNorms {
  double sup = 0.0;
  double l2 = 0.0;
  struct Pair {
    int i, j;
    double sup, l2;
  };
  std::vector<Pair> pairs;
};

ErrorNorms error_norms(const RateFunction& a, const RateFunction& b,
                       double y_max, int samples);

}  // namespace regime
