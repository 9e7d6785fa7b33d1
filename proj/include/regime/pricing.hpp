#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "regime/semi_markov.hpp"

namespace regime {

// Numerical settings of the pricing solver. Zeros mean "derive a default
// from the market parameters" (s_max = 8K, delta_s = s_max/640).
struct SolverConfig {
  double delta_t = 0.004;
  double s_max = 0.0;
  double delta_s = 0.0;
  double theta_scheme = 0.5;   // 0.5 = Crank-Nicolson, 1 = implicit
  int rannacher_steps = 2;     // fully implicit steps off the payoff kink
  bool keep_full_lattice = false;
};

// Lattice for the pricing system. Time and age share the step dt, so the
// transport part of the operator moves exactly one age node per time node;
// ages live on the triangle q <= m.
struct PriceGrid {
  double maturity = 0.0;
  int num_time_steps = 0;  // dt = maturity / num_time_steps
  double dt = 0.0;
  double s_max = 0.0;
  int num_space_steps = 0;  // ds = s_max / num_space_steps
  double ds = 0.0;
  int num_states = 0;
  double theta_scheme = 0.5;
  int rannacher_steps = 2;
  bool keep_full_lattice = false;

  double time(int m) const { return dt * m; }
  double spot(int n) const { return ds * n; }
  double age(int q) const { return dt * q; }

  static PriceGrid build(const MarketParams& params,
                         const SolverConfig& config);
};

// Solved call-price surface phi(t_m, s_n, i, y_q) on the triangular lattice.
// The y = 0 plane and the terminal slice are always retained; the full
// triangle only when the grid asked for it (or the single-regime solve
// collapsed the age axis, which costs nothing).
class PriceSurface {
 public:
  const PriceGrid& grid() const { return grid_; }
  RateKind rate_kind() const { return rate_kind_; }
  bool has_full_lattice() const { return full_ || collapsed_; }
  bool age_collapsed() const { return collapsed_; }

  // Lattice accessor; requires q <= m and, unless the full lattice (or a
  // collapsed one) is available, q == 0.
  double value(int m, int n, int i, int q) const;

  friend PriceSurface solve_pde(const MarketParams& params,
                                const RateFunction& rate,
                                const PriceGrid& grid);

 private:
  PriceGrid grid_;
  RateKind rate_kind_ = RateKind::ClosedForm;
  bool full_ = false;
  bool collapsed_ = false;
  double strike_ = 0.0;
  // y0_[i][m * (Ns+1) + n]; always filled (for collapsed surfaces it holds
  // the whole solution).
  std::vector<std::vector<double>> y0_;
  // full_values_[m][((i * (m+1)) + q) * (Ns+1) + n] when full_ is set.
  std::vector<std::vector<double>> full_values_;
};

// Backward march of the pricing system
//   phi_t + phi_y + r s phi_s + (1/2) sigma^2 s^2 phi_ss
//     + sum_j lambda_ij(y) [phi(t,s,j,0) - phi(t,s,i,y)] = r phi
// with terminal payoff (s - K)^+ and phi = 0 at s = 0. Each characteristic
// (t, y) -> (t - dt, y - dt) is advanced by a theta-scheme tridiagonal solve
// in s; the self-rate is folded into the implicit operator and the
// cross-state coupling uses the already-computed newer time level.
PriceSurface solve_pde(const MarketParams& params, const RateFunction& rate,
                       const PriceGrid& grid);

// Interpolated surface lookup: linear in s, characteristic-consistent in
// (t, y). Exact at lattice points. Throws outside the hull, or when the
// query needs lattice data that was not retained.
double price_at(const PriceSurface& surface, double t, double s, int i,
                double y);

struct McPrice {
  double price = 0.0;
  double std_error = 0.0;
};

// Risk-neutral Monte Carlo price of the call observed at (t, s, i, y):
// regimes driven by the supplied rate function starting at age y, exact
// lognormal spot increments per sojourn, payoff discounted along the path.
McPrice monte_carlo_price(const MarketParams& params, const RateFunction& rate,
                          double t, double s, int i, double y, long paths,
                          std::uint64_t seed, int threads = 1);

// Closed-form single-regime call (the classical lognormal formula).
double black_scholes_call(double s, double strike, double r, double sigma,
                          double time_to_maturity);

}  // namespace regime
