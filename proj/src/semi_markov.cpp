#include "regime/semi_markov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace regime {

namespace {

constexpr double kCdfCap = 1.0 - 1e-14;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

// ---------------------------------------------------------------------------
// HoldingLaw

HoldingLaw::HoldingLaw(Family f, double shape, double scale)
    : family_(f), shape_(shape), scale_(scale) {}

HoldingLaw HoldingLaw::exponential(double rate) {
  require(rate > 0.0, "exponential holding law requires rate > 0");
  return HoldingLaw(Family::Exponential, 1.0, rate);
}

HoldingLaw HoldingLaw::gamma(int shape, double rate) {
  require(shape >= 1, "gamma holding law requires integer shape >= 1");
  require(rate > 0.0, "gamma holding law requires rate > 0");
  return HoldingLaw(Family::Gamma, static_cast<double>(shape), rate);
}

HoldingLaw HoldingLaw::weibull(double shape, double scale) {
  require(shape >= 1.0, "weibull holding law requires shape >= 1");
  require(scale > 0.0, "weibull holding law requires scale > 0");
  return HoldingLaw(Family::Weibull, shape, scale);
}

double HoldingLaw::pdf(double y) const {
  if (y < 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return scale_ * std::exp(-scale_ * y);
    case Family::Gamma: {
      const int k = static_cast<int>(shape_);
      return std::pow(scale_, k) * std::pow(y, k - 1) *
             std::exp(-scale_ * y) / factorial(k - 1);
    }
    case Family::Weibull: {
      if (y == 0.0) return shape_ == 1.0 ? 1.0 / scale_ : 0.0;
      const double z = y / scale_;
      return (shape_ / scale_) * std::pow(z, shape_ - 1.0) *
             std::exp(-std::pow(z, shape_));
    }
  }
  return 0.0;
}

double HoldingLaw::cdf(double y) const {
  if (y <= 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return -std::expm1(-scale_ * y);
    case Family::Gamma: {
      // 1 - exp(-b y) * sum_{n<k} (b y)^n / n!
      const int k = static_cast<int>(shape_);
      const double by = scale_ * y;
      double term = 1.0, sum = 1.0;
      for (int n = 1; n < k; ++n) {
        term *= by / n;
        sum += term;
      }
      return 1.0 - std::exp(-by) * sum;
    }
    case Family::Weibull:
      return -std::expm1(-std::pow(y / scale_, shape_));
  }
  return 0.0;
}

double HoldingLaw::mean() const {
  switch (family_) {
    case Family::Exponential:
      return 1.0 / scale_;
    case Family::Gamma:
      return shape_ / scale_;
    case Family::Weibull:
      return scale_ * std::tgamma(1.0 + 1.0 / shape_);
  }
  return 0.0;
}

double HoldingLaw::hazard(double y) const {
  if (y < 0.0) return 0.0;
  double h = 0.0;
  switch (family_) {
    case Family::Exponential:
      h = scale_;
      break;
    case Family::Gamma: {
      // f / (1 - F) with the shared exp(-b y) cancelled: the survival sum is
      // the truncated series, so the ratio stays well scaled far past the
      // point where 1 - F itself underflows.
      const int k = static_cast<int>(shape_);
      const double by = scale_ * y;
      double term = 1.0, sum = 1.0;
      for (int n = 1; n < k; ++n) {
        term *= by / n;
        sum += term;
      }
      h = scale_ * term / sum;
      break;
    }
    case Family::Weibull: {
      if (y == 0.0) return shape_ == 1.0 ? 1.0 / scale_ : 0.0;
      const double z = y / scale_;
      h = (shape_ / scale_) * std::pow(z, shape_ - 1.0);
      break;
    }
  }
  if (!std::isfinite(h))
    throw std::domain_error("hazard blow-up: F(y) is numerically 1");
  return h;
}

double HoldingLaw::cumulative_hazard(double y) const {
  if (y <= 0.0) return 0.0;
  switch (family_) {
    case Family::Exponential:
      return scale_ * y;
    case Family::Gamma: {
      const int k = static_cast<int>(shape_);
      const double by = scale_ * y;
      double term = 1.0, sum = 1.0;
      for (int n = 1; n < k; ++n) {
        term *= by / n;
        sum += term;
      }
      return by - std::log(sum);
    }
    case Family::Weibull:
      return std::pow(y / scale_, shape_);
  }
  return 0.0;
}

double HoldingLaw::hazard_sup(double lo, double hi) const {
  // Exponential hazard is flat; gamma (shape >= 1) and weibull (shape >= 1)
  // hazards are nondecreasing, so the sup sits at the right endpoint.
  (void)lo;
  switch (family_) {
    case Family::Exponential:
      return scale_;
    case Family::Gamma:
      // Increasing with limit `rate`; the limit bounds any window and avoids
      // evaluating the hazard ratio where the survival has underflowed.
      if (!std::isfinite(hi) || cdf(hi) >= kCdfCap) return scale_;
      return std::min(scale_, hazard(hi));
    case Family::Weibull: {
      // Power form directly; no survival guard needed.
      if (hi <= 0.0) return shape_ == 1.0 ? 1.0 / scale_ : 0.0;
      return (shape_ / scale_) * std::pow(hi / scale_, shape_ - 1.0);
    }
  }
  return 0.0;
}

double HoldingLaw::sample_conditional(double age0, Rng& rng) const {
  const double e = rng.exponential();
  switch (family_) {
    case Family::Exponential:
      return e / scale_;  // memoryless
    case Family::Weibull: {
      // Solve Lambda(age0 + s) - Lambda(age0) = e in closed form.
      const double base = std::pow(age0 / scale_, shape_);
      return scale_ * std::pow(base + e, 1.0 / shape_) - age0;
    }
    case Family::Gamma: {
      // Thinning against the hazard cap `rate` (the Erlang hazard increases
      // to it), windowed with geometric extension.
      double a = age0;
      double window = std::max(4.0 * mean(), 1.0);
      double hi = age0 + window;
      double step = e;  // reuse the first exponential draw
      for (int guard = 0; guard < 100000000; ++guard) {
        const double bound = hazard_sup(a, hi);
        if (bound <= 0.0) {
          a = hi;
          window *= 2.0;
          hi = a + window;
          continue;
        }
        const double candidate = a + step / bound;
        if (candidate > hi) {
          // No proposal inside the window; restart from its right edge.
          step = (candidate - hi) * bound;
          a = hi;
          window *= 2.0;
          hi = a + window;
          continue;
        }
        a = candidate;
        if (rng.uniform01() * bound <= hazard(a)) return a - age0;
        step = rng.exponential();
      }
      throw std::runtime_error("holding-time thinning failed to terminate");
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// MarketParams / CensoredHistory

void MarketParams::validate() const {
  const int n = num_states();
  require(n >= 1, "market: at least one state required");
  require(static_cast<int>(volatilities.size()) == n &&
              static_cast<int>(drifts.size()) == n,
          "market: rates/volatilities/drifts must have equal length");
  for (int i = 0; i < n; ++i) {
    require(volatilities[i] > 0.0, "market: volatilities must be positive");
    require(rates[i] >= 0.0 && drifts[i] >= 0.0,
            "market: rates and drifts must be nonnegative");
  }
  // Strike zero is allowed (degenerate forward contract, useful as a
  // martingale check); the PDE grid additionally requires strike > 0.
  require(strike >= 0.0 && maturity > 0.0 && spot > 0.0,
          "market: maturity and spot must be positive, strike nonnegative");
}

void CensoredHistory::validate() const {
  require(horizon > 0.0, "history: horizon must be positive");
  require(states.size() == holding_times.size() + 1,
          "history: need exactly one more state than holding time");
  require(backward_recurrence >= 0.0,
          "history: backward recurrence must be nonnegative");
  double total = backward_recurrence;
  for (std::size_t l = 0; l < holding_times.size(); ++l) {
    require(holding_times[l] > 0.0, "history: holding times must be positive");
    require(states[l] != states[l + 1],
            "history: consecutive states must differ");
    total += holding_times[l];
  }
  require(std::abs(total - horizon) <= 1e-9 * std::max(1.0, horizon),
          "history: holding times plus backward recurrence must equal horizon");
}

// ---------------------------------------------------------------------------
// RateFunction defaults

double RateFunction::total_rate(int i, double y) const {
  double sum = 0.0;
  for (int j = 0; j < num_states(); ++j)
    if (j != i) sum += rate(i, j, y);
  return sum;
}

double RateFunction::next_breakpoint(int, double) const {
  return std::numeric_limits<double>::infinity();
}

std::vector<double> RateFunction::breakpoints(double, double) const {
  return {};
}

// ---------------------------------------------------------------------------
// SemiMarkovModel

bool is_irreducible(const std::vector<std::vector<double>>& matrix) {
  const int n = static_cast<int>(matrix.size());
  if (n == 1) return true;
  // Reachability closure from every state.
  for (int s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<int> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < n; ++j)
        if (!seen[j] && matrix[i][j] > 0.0) {
          seen[j] = true;
          stack.push_back(j);
        }
    }
    for (int j = 0; j < n; ++j)
      if (!seen[j]) return false;
  }
  return true;
}

SemiMarkovModel::SemiMarkovModel(
    std::vector<std::vector<double>> transition_matrix,
    std::vector<HoldingLaw> holding_laws,
    std::vector<double> initial_distribution)
    : num_states_(static_cast<int>(transition_matrix.size())),
      transition_(std::move(transition_matrix)),
      holding_(std::move(holding_laws)),
      initial_(std::move(initial_distribution)) {
  require(num_states_ >= 1, "model: at least one state required");
  require(static_cast<int>(holding_.size()) == num_states_,
          "model: one holding law per state required");
  require(static_cast<int>(initial_.size()) == num_states_,
          "model: initial distribution length mismatch");
  double p0 = 0.0;
  for (double p : initial_) {
    require(p >= 0.0, "model: initial distribution entries must be >= 0");
    p0 += p;
  }
  require(std::abs(p0 - 1.0) <= 1e-12, "model: initial distribution must sum to 1");
  for (int i = 0; i < num_states_; ++i) {
    require(static_cast<int>(transition_[i].size()) == num_states_,
            "model: transition matrix must be square");
    require(transition_[i][i] == 0.0,
            "model: transition matrix diagonal must be zero");
    double row = 0.0;
    for (double p : transition_[i]) {
      require(p >= 0.0, "model: transition probabilities must be >= 0");
      row += p;
    }
    if (num_states_ == 1) {
      require(row == 0.0, "model: single-state row must be zero");
    } else {
      require(std::abs(row - 1.0) <= 1e-12,
              "model: transition matrix rows must sum to 1");
    }
  }
  if (num_states_ > 1)
    require(is_irreducible(transition_), "model: transition matrix must be irreducible");
}

// ---------------------------------------------------------------------------
// Closed-form rate from a model

namespace {

class ClosedFormRate final : public RateFunction {
 public:
  explicit ClosedFormRate(std::shared_ptr<const SemiMarkovModel> model)
      : model_(std::move(model)) {}

  int num_states() const override { return model_->num_states(); }
  RateKind kind() const override { return RateKind::ClosedForm; }

  double rate(int i, int j, double y) const override {
    return model_->transition_probability(i, j) *
           model_->holding_law(i).hazard(y);
  }

  double total_rate(int i, double y) const override {
    // Rows of the embedded chain sum to 1, so the exit rate is the raw
    // hazard of the holding law.
    if (num_states() == 1) return 0.0;
    return model_->holding_law(i).hazard(y);
  }

  double cumulative_hazard(int i, double y) const override {
    if (num_states() == 1) return 0.0;
    return model_->holding_law(i).cumulative_hazard(y);
  }

  double total_rate_bound(int i, double lo, double hi) const override {
    if (num_states() == 1) return 0.0;
    return model_->holding_law(i).hazard_sup(lo, hi);
  }

 private:
  std::shared_ptr<const SemiMarkovModel> model_;
};

}  // namespace

std::shared_ptr<const RateFunction> hazard_from_model(
    std::shared_ptr<const SemiMarkovModel> model) {
  return std::make_shared<ClosedFormRate>(std::move(model));
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

int draw_initial_state(const std::vector<double>& initial, Rng& rng) {
  return rng.discrete(initial);
}

int draw_next_state(const SemiMarkovModel& model, int i, Rng& rng) {
  return rng.discrete(model.transition_matrix()[i]);
}

}  // namespace

CensoredHistory simulate_history(const SemiMarkovModel& model, double horizon,
                                 std::uint64_t seed) {
  require(horizon > 0.0, "simulate_history: horizon must be positive");
  Rng rng(derive_seed(seed, 0));
  CensoredHistory h;
  h.horizon = horizon;
  int state = draw_initial_state(model.initial_distribution(), rng);
  h.states.push_back(state);
  double elapsed = 0.0;
  for (;;) {
    double sojourn = model.num_states() == 1
                         ? std::numeric_limits<double>::infinity()
                         : model.holding_law(state).sample_conditional(0.0, rng);
    if (elapsed + sojourn >= horizon) {
      h.backward_recurrence = horizon - elapsed;
      break;
    }
    elapsed += sojourn;
    state = draw_next_state(model, state, rng);
    h.holding_times.push_back(sojourn);
    h.states.push_back(state);
  }
  return h;
}

double sample_sojourn(const RateFunction& rate, int state, double age0,
                      Rng& rng) {
  const double inf = std::numeric_limits<double>::infinity();
  if (rate.num_states() == 1) return inf;
  double a = age0;
  double window = 1.0;
  for (int guard = 0; guard < 100000000; ++guard) {
    const double bp = rate.next_breakpoint(state, a);
    const double hi = std::min(bp, a + window);
    const double bound = rate.total_rate_bound(state, a, hi);
    if (bound <= 0.0) {
      // Nothing can fire in this window. With no knots ahead and no hazard
      // mass on the whole tail, the sojourn is infinite.
      if (bp == inf && rate.total_rate_bound(state, a, inf) <= 0.0) return inf;
      if (hi >= a + window) window *= 2.0;
      a = hi;
      continue;
    }
    const double candidate = a + rng.exponential() / bound;
    if (candidate > hi) {
      if (hi >= a + window) window *= 2.0;
      a = hi;
      continue;
    }
    a = candidate;
    if (rng.uniform01() * bound <= rate.total_rate(state, a)) return a - age0;
  }
  throw std::runtime_error("rate thinning failed to terminate");
}

int sample_destination(const RateFunction& rate, int state, double y,
                       Rng& rng) {
  const int n = rate.num_states();
  std::vector<double> weights(n, 0.0);
  for (int j = 0; j < n; ++j)
    if (j != state) weights[j] = rate.rate(state, j, y);
  return rng.discrete(weights);
}

CensoredHistory simulate_history(const RateFunction& rate,
                                 const std::vector<double>& initial,
                                 double horizon, std::uint64_t seed) {
  require(horizon > 0.0, "simulate_history: horizon must be positive");
  require(static_cast<int>(initial.size()) == rate.num_states(),
          "simulate_history: initial distribution length mismatch");
  Rng rng(derive_seed(seed, 0));
  CensoredHistory h;
  h.horizon = horizon;
  int state = draw_initial_state(initial, rng);
  h.states.push_back(state);
  double elapsed = 0.0;
  for (;;) {
    double sojourn = sample_sojourn(rate, state, 0.0, rng);
    if (elapsed + sojourn >= horizon) {
      h.backward_recurrence = horizon - elapsed;
      break;
    }
    elapsed += sojourn;
    state = sample_destination(rate, state, sojourn, rng);
    h.holding_times.push_back(sojourn);
    h.states.push_back(state);
  }
  return h;
}

CensoredHistory truncate_history(const CensoredHistory& history,
                                 double horizon) {
  require(horizon > 0.0 && horizon <= history.horizon,
          "truncate_history: horizon must lie in (0, original horizon]");
  CensoredHistory h;
  h.horizon = horizon;
  h.states.push_back(history.states[0]);
  double elapsed = 0.0;
  for (int l = 0; l < history.num_transitions(); ++l) {
    const double y = history.holding_times[l];
    if (elapsed + y >= horizon) break;
    elapsed += y;
    h.holding_times.push_back(y);
    h.states.push_back(history.states[l + 1]);
  }
  h.backward_recurrence = horizon - elapsed;
  return h;
}

// ---------------------------------------------------------------------------
// Asset paths

std::vector<double> AssetPath::occupation(double t0, double t1) const {
  std::vector<double> occ(rates.size(), 0.0);
  for (std::size_t k = 0; k < segment_start.size(); ++k) {
    const double a = segment_start[k];
    const double b =
        (k + 1 < segment_start.size()) ? segment_start[k + 1] : horizon;
    const double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi > lo) occ[segment_state[k]] += hi - lo;
  }
  return occ;
}

AssetPath simulate_asset_path(const SemiMarkovModel& model,
                              const MarketParams& params, Measure measure,
                              double step, std::uint64_t seed,
                              double initial_age) {
  require(step > 0.0, "simulate_asset_path: step must be positive");
  params.validate();
  require(params.num_states() == model.num_states(),
          "simulate_asset_path: market/model state count mismatch");
  Rng rng(derive_seed(seed, 0));

  AssetPath path;
  path.rates = params.rates;
  path.horizon = params.maturity;

  int state = draw_initial_state(model.initial_distribution(), rng);
  double t = 0.0, age = initial_age, log_spot = std::log(params.spot);
  path.segment_start.push_back(0.0);
  path.segment_state.push_back(state);
  path.sample_time.push_back(0.0);
  path.sample_spot.push_back(params.spot);
  path.sample_state.push_back(state);
  path.sample_age.push_back(age);

  double next_mesh = step;
  double next_jump =
      t + (model.num_states() == 1
               ? std::numeric_limits<double>::infinity()
               : model.holding_law(state).sample_conditional(age, rng));
  while (t < params.maturity) {
    const double target =
        std::min({next_mesh, next_jump, params.maturity});
    const double dur = target - t;
    if (dur > 0.0) {
      const double mu = measure == Measure::RiskNeutral
                            ? params.rates[state]
                            : params.drifts[state];
      const double sigma = params.volatilities[state];
      log_spot += (mu - 0.5 * sigma * sigma) * dur +
                  sigma * std::sqrt(dur) * rng.normal();
      t = target;
      age += dur;
    }
    const bool at_jump = (t == next_jump) && (t < params.maturity);
    if (at_jump) {
      state = draw_next_state(model, state, rng);
      age = 0.0;
      path.segment_start.push_back(t);
      path.segment_state.push_back(state);
      next_jump = t + model.holding_law(state).sample_conditional(0.0, rng);
    }
    path.sample_time.push_back(t);
    path.sample_spot.push_back(std::exp(log_spot));
    path.sample_state.push_back(state);
    path.sample_age.push_back(age);
    if (t == next_mesh) next_mesh += step;
    if (t >= params.maturity) break;
  }
  return path;
}

double discount_factor(const AssetPath& path, double t0, double t1) {
  require(0.0 <= t0 && t0 <= t1 && t1 <= path.horizon + 1e-12,
          "discount_factor: interval outside the path span");
  const auto occ = path.occupation(t0, t1);
  double integral = 0.0;
  for (std::size_t i = 0; i < occ.size(); ++i)
    integral += path.rates[i] * occ[i];
  return std::exp(-integral);
}

}  // namespace regime
