#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "regime/rng.hpp"

namespace regime {

// Holding-time law of one state. Families are parametric with closed-form
// density, distribution function and cumulative hazard; gamma shapes are
// restricted to integers (Erlang) so no incomplete-gamma evaluation is
// needed. Shape parameters below 1 are rejected: they give hazards that
// blow up at the origin, which the estimator and the pricing system both
// assume away.
class HoldingLaw {
 public:
  enum class Family { Exponential, Gamma, Weibull };

  static HoldingLaw exponential(double rate);
  static HoldingLaw gamma(int shape, double rate);
  static HoldingLaw weibull(double shape, double scale);

  Family family() const { return family_; }
  double shape() const { return shape_; }
  double scale() const { return scale_; }

  double pdf(double y) const;
  double cdf(double y) const;
  double mean() const;
  // f(y) / (1 - F(y)); throws when F(y) >= 1 - 1e-14.
  double hazard(double y) const;
  // -ln(1 - F(y)), in closed form per family.
  double cumulative_hazard(double y) const;
  // sup of hazard over [lo, hi] (all supported families have monotone
  // hazards, so this is an endpoint value).
  double hazard_sup(double lo, double hi) const;

  bool has_closed_inverse() const { return family_ != Family::Gamma; }
  // Sojourn beyond age0, conditioned on survival to age0. Inverse-CDF when
  // the family admits it; thinning against hazard_sup otherwise, with the
  // proposal window extended geometrically until acceptance.
  double sample_conditional(double age0, Rng& rng) const;

 private:
  HoldingLaw(Family f, double shape, double scale);
  Family family_;
  double shape_;  // gamma/weibull shape; unused for exponential
  double scale_;  // rate for exponential/gamma, scale for weibull
};

// Regime-market parameters: per-state short rate, volatility and growth
// rate, plus the call contract (strike, maturity) and the spot.
struct MarketParams {
  std::vector<double> rates;         // r(i) >= 0
  std::vector<double> volatilities;  // sigma(i) > 0
  std::vector<double> drifts;        // mu(i) >= 0
  double strike = 1.0;
  double maturity = 1.0;
  double spot = 1.0;

  int num_states() const { return static_cast<int>(rates.size()); }
  void validate() const;  // throws std::invalid_argument
};

// One observed trajectory of the regime process truncated at `horizon`:
// visited states X_0..X_N, sojourn lengths Y_1..Y_N and the backward
// recurrence time U = horizon - T_N.
struct CensoredHistory {
  std::vector<int> states;
  std::vector<double> holding_times;
  double backward_recurrence = 0.0;
  double horizon = 0.0;

  int num_transitions() const {
    return static_cast<int>(holding_times.size());
  }
  void validate() const;  // throws std::invalid_argument
};

enum class RateKind { ClosedForm, Step, Spline };

// Age-dependent transition rates of the regime process: lambda_ij(y) for
// i != j together with the per-state cumulative hazard Lambda_i(y). The
// diagonal is never queried. Implementations are immutable and reentrant.
class RateFunction {
 public:
  virtual ~RateFunction() = default;

  virtual int num_states() const = 0;
  virtual RateKind kind() const = 0;
  virtual double rate(int i, int j, double y) const = 0;
  virtual double cumulative_hazard(int i, double y) const = 0;

  // lambda_i(y) = sum over j != i.
  virtual double total_rate(int i, double y) const;
  // Upper bound for lambda_i on [lo, hi]; drives thinning proposals.
  virtual double total_rate_bound(int i, double lo, double hi) const = 0;
  // Next discontinuity/knot strictly above y (+inf when none); piecewise
  // representations override so thinning can use exact per-cell bounds.
  virtual double next_breakpoint(int i, double y) const;
  // All representation knots inside [lo, hi], for norm sampling.
  virtual std::vector<double> breakpoints(double lo, double hi) const;
};

// The semi-Markov regime model: embedded chain, holding-time laws and the
// initial distribution. Ground truth for simulation and the source of the
// closed-form rate function.
class SemiMarkovModel {
 public:
  SemiMarkovModel(std::vector<std::vector<double>> transition_matrix,
                  std::vector<HoldingLaw> holding_laws,
                  std::vector<double> initial_distribution);

  int num_states() const { return num_states_; }
  double transition_probability(int i, int j) const {
    return transition_[i][j];
  }
  const std::vector<std::vector<double>>& transition_matrix() const {
    return transition_;
  }
  const HoldingLaw& holding_law(int i) const { return holding_[i]; }
  const std::vector<double>& initial_distribution() const { return initial_; }

 private:
  int num_states_;
  std::vector<std::vector<double>> transition_;
  std::vector<HoldingLaw> holding_;
  std::vector<double> initial_;
};

// True whether every state reaches every other through positive entries.
bool is_irreducible(const std::vector<std::vector<double>>& matrix);

// lambda_ij(y) = p_ij f(y|i) / (1 - F(y|i)), with Lambda_i closed form.
std::shared_ptr<const RateFunction> hazard_from_model(
    std::shared_ptr<const SemiMarkovModel> model);

// One censored history of the model on [0, horizon]. Deterministic in seed.
CensoredHistory simulate_history(const SemiMarkovModel& model, double horizon,
                                 std::uint64_t seed);

// Rate-driven variant: sojourns by thinning against the supplied rate
// function, destinations by the rate ratios at the jump age. Covers models
// specified through an estimated (step or spline) rate.
CensoredHistory simulate_history(const RateFunction& rate,
                                 const std::vector<double>& initial,
                                 double horizon, std::uint64_t seed);

// Truncation of a history to a smaller horizon (nested tau sweeps).
CensoredHistory truncate_history(const CensoredHistory& history,
                                 double horizon);

enum class Measure { Physical, RiskNeutral };

// A regime-modulated asset path: regime segments with exact piecewise
// lognormal evolution, plus samples on a reporting mesh of width `step`
// (jump times are always included as sample points).
struct AssetPath {
  std::vector<double> segment_start;  // ascending, segment_start[0] == 0
  std::vector<int> segment_state;
  std::vector<double> rates;  // r(i) copied from the market parameters
  double horizon = 0.0;

  std::vector<double> sample_time;
  std::vector<double> sample_spot;
  std::vector<int> sample_state;
  std::vector<double> sample_age;

  double terminal_spot() const { return sample_spot.back(); }
  // Occupation time of each state on [t0, t1].
  std::vector<double> occupation(double t0, double t1) const;
};

AssetPath simulate_asset_path(const SemiMarkovModel& model,
                              const MarketParams& params, Measure measure,
                              double step, std::uint64_t seed,
                              double initial_age = 0.0);

// exp(-integral of r(X_u) over [t0, t1]) from exact regime occupation.
double discount_factor(const AssetPath& path, double t0, double t1);

// Sojourn beyond `age0` for state i under an arbitrary rate function
// (piecewise thinning; +inf when the remaining hazard mass is zero).
double sample_sojourn(const RateFunction& rate, int state, double age0,
                      Rng& rng);

// Destination state for a jump out of `state` at age `y`.
int sample_destination(const RateFunction& rate, int state, double y,
                       Rng& rng);

}  // namespace regime
