#include "regime/semi_markov.hpp"

#include <cmath>
#include <doctest.h>

#include "helpers.hpp"

using namespace regime;
using regime::testing::example_model;
using regime::testing::example_market;
using regime::testing::single_regime_model;
using regime::testing::single_regime_market;

TEST_CASE("model invariants are enforced") {
  std::vector<HoldingLaw> laws(2, HoldingLaw::exponential(1.0));
  std::vector<double> uniform = {0.5, 0.5};

  CHECK_THROWS_AS(SemiMarkovModel({{0.5, 0.5}, {1.0, 0.0}}, laws, uniform),
                  std::invalid_argument);  // nonzero diagonal
  CHECK_THROWS_AS(SemiMarkovModel({{0.0, 0.9}, {1.0, 0.0}}, laws, uniform),
                  std::invalid_argument);  // row sum != 1
  CHECK_THROWS_AS(SemiMarkovModel({{0.0, 1.0}, {1.0, 0.0}}, laws, {0.7, 0.7}),
                  std::invalid_argument);  // initial distribution sum != 1
  std::vector<HoldingLaw> laws3(3, HoldingLaw::exponential(1.0));
  CHECK_THROWS_AS(
      SemiMarkovModel({{0.0, 1.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}},
                      laws3, {0.5, 0.5, 0.0}),
      std::invalid_argument);  // state 3 unreachable/absorbing row

  CHECK_THROWS_AS(HoldingLaw::gamma(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(HoldingLaw::weibull(0.5, 1.0), std::invalid_argument);
}

TEST_CASE("closed-form hazard of the example model") {
  auto rate = hazard_from_model(example_model());

  // lambda_13(2) = 0.9 * 2/3
  CHECK(rate->rate(0, 2, 2.0) == doctest::Approx(0.6).epsilon(1e-12));
  // zero density at the origin
  CHECK(rate->rate(0, 2, 0.0) == doctest::Approx(0.0));
  // Lambda_i(1) = 1 - ln 2
  CHECK(rate->cumulative_hazard(0, 1.0) ==
        doctest::Approx(0.306852819440054691).epsilon(1e-12));

  SUBCASE("kernel consistency: 1 - exp(-Lambda) reproduces F on [0, 10]") {
    const auto model = example_model();
    for (int k = 0; k <= 1000; ++k) {
      const double y = 10.0 * k / 1000.0;
      const double from_hazard = 1.0 - std::exp(-rate->cumulative_hazard(0, y));
      const double direct = 1.0 - (1.0 + y) * std::exp(-y);
      CHECK(std::abs(from_hazard - direct) <= 1e-10);
      CHECK(std::abs(model->holding_law(0).cdf(y) - direct) <= 1e-10);
    }
  }

  SUBCASE("row hazard identity: sum over destinations is y/(1+y)") {
    for (double y : {0.0, 0.3, 1.0, 2.5, 7.0})
      for (int i = 0; i < 3; ++i)
        CHECK(rate->total_rate(i, y) ==
              doctest::Approx(y / (1.0 + y)).epsilon(1e-12));
  }

  SUBCASE("evaluation rejects hazard blow-up where F is numerically 1") {
    CHECK_THROWS_AS(rate->rate(0, 2, 60.0), std::domain_error);
  }
}

TEST_CASE("holding-law samplers match their cumulative hazards") {
  // If s is a conditional sojourn beyond age y0, Lambda(y0 + s) - Lambda(y0)
  // is standard exponential; check the first two moments.
  auto check_law = [](const HoldingLaw& law, double age0) {
    Rng rng(derive_seed(999, static_cast<std::uint64_t>(age0 * 100)));
    const int n = 20000;
    double mean = 0.0, mean2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double s = law.sample_conditional(age0, rng);
      const double e =
          law.cumulative_hazard(age0 + s) - law.cumulative_hazard(age0);
      mean += e;
      mean2 += e * e;
    }
    mean /= n;
    mean2 /= n;
    CHECK(std::abs(mean - 1.0) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(mean2 - 2.0) < 3.0 * std::sqrt(20.0 / n));
  };
  check_law(HoldingLaw::exponential(0.5), 0.0);
  check_law(HoldingLaw::gamma(2, 1.0), 0.0);
  check_law(HoldingLaw::gamma(2, 1.0), 1.7);
  check_law(HoldingLaw::gamma(3, 2.0), 0.4);
  check_law(HoldingLaw::weibull(2.0, 1.5), 0.0);
  check_law(HoldingLaw::weibull(2.0, 1.5), 2.2);
}

TEST_CASE("simulated histories") {
  const auto model = example_model();

  SUBCASE("identical seeds reproduce bit for bit") {
    const auto a = simulate_history(*model, 500.0, 42);
    const auto b = simulate_history(*model, 500.0, 42);
    CHECK(a.states == b.states);
    CHECK(a.holding_times == b.holding_times);
    CHECK(a.backward_recurrence == b.backward_recurrence);
    const auto c = simulate_history(*model, 500.0, 43);
    CHECK(a.holding_times != c.holding_times);
  }

  SUBCASE("holding times plus backward recurrence partition the horizon") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
      const auto h = simulate_history(*model, 123.0, seed);
      h.validate();
      double total = h.backward_recurrence;
      for (double y : h.holding_times) total += y;
      CHECK(total == doctest::Approx(123.0).epsilon(1e-12));
    }
  }

  SUBCASE("horizon below the first sojourn censors immediately") {
    const auto h = simulate_history(*model, 1e-7, 42);
    CHECK(h.num_transitions() == 0);
    CHECK(h.backward_recurrence == doctest::Approx(1e-7));
  }

  SUBCASE("transition frequencies converge to the embedded chain") {
    const auto h = simulate_history(*model, 1e4, 7);
    std::vector<std::vector<double>> counts(3, std::vector<double>(3, 0.0));
    std::vector<double> departures(3, 0.0);
    double mean_sojourn = 0.0;
    for (int l = 0; l < h.num_transitions(); ++l) {
      counts[h.states[l]][h.states[l + 1]] += 1.0;
      departures[h.states[l]] += 1.0;
      mean_sojourn += h.holding_times[l];
    }
    mean_sojourn /= h.num_transitions();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const double p = model->transition_probability(i, j);
        const double se = std::sqrt(p * (1.0 - p) / departures[i]);
        CHECK(std::abs(counts[i][j] / departures[i] - p) <= 3.0 * se);
      }
    // Gamma(2, 1) sojourns: mean 2, sd sqrt(2).
    const double se =
        std::sqrt(2.0 / static_cast<double>(h.num_transitions()));
    CHECK(std::abs(mean_sojourn - 2.0) <= 3.0 * se);
  }

  SUBCASE("rate-driven simulation agrees with the parametric sampler") {
    const auto rate = hazard_from_model(model);
    const auto h = simulate_history(*rate, model->initial_distribution(),
                                    5000.0, 11);
    h.validate();
    double mean_sojourn = 0.0;
    for (double y : h.holding_times) mean_sojourn += y;
    mean_sojourn /= h.num_transitions();
    const double se =
        std::sqrt(2.0 / static_cast<double>(h.num_transitions()));
    CHECK(std::abs(mean_sojourn - 2.0) <= 3.0 * se);
  }

  SUBCASE("truncation keeps the prefix") {
    const auto h = simulate_history(*model, 200.0, 5);
    const auto t = truncate_history(h, 50.0);
    t.validate();
    CHECK(t.horizon == 50.0);
    for (int l = 0; l < t.num_transitions(); ++l) {
      CHECK(t.states[l] == h.states[l]);
      CHECK(t.holding_times[l] == h.holding_times[l]);
    }
  }
}

TEST_CASE("asset paths") {
  SUBCASE("vanishing volatility gives the deterministic money account") {
    auto market = single_regime_market(0.3, 1e-12);
    const auto path = simulate_asset_path(*single_regime_model(), market,
                                          Measure::RiskNeutral, 0.25, 1);
    CHECK(path.terminal_spot() ==
          doctest::Approx(std::exp(0.3)).epsilon(1e-9));
  }

  SUBCASE("discounted terminal spot is a martingale") {
    auto market = single_regime_market(0.3, 0.2);
    const auto model = single_regime_model();
    const int n = 20000;
    double mean = 0.0, mean2 = 0.0;
    for (int p = 0; p < n; ++p) {
      const auto path = simulate_asset_path(*model, market,
                                            Measure::RiskNeutral, 1.0,
                                            derive_seed(1234, p));
      const double x = std::exp(-0.3) * path.terminal_spot();
      mean += x;
      mean2 += x * x;
    }
    mean /= n;
    mean2 /= n;
    const double se = std::sqrt((mean2 - mean * mean) / n);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
  }

  SUBCASE("log-return variance matches the realized regime occupation") {
    // With drifts mu = r and per-state sigmas, the standardized log return
    //   z = (ln S_T - sum (mu - sigma^2/2) occ_i) / sqrt(sum sigma^2 occ_i)
    // is standard normal path by path.
    auto market = example_market();
    market.volatilities = {0.2, 0.3, 0.4};
    const auto model = example_model();
    const int n = 4000;
    double zsum = 0.0, z2sum = 0.0;
    for (int p = 0; p < n; ++p) {
      const auto path = simulate_asset_path(*model, market, Measure::Physical,
                                            0.5, derive_seed(777, p));
      const auto occ = path.occupation(0.0, 1.0);
      double drift = 0.0, var = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double sig = market.volatilities[i];
        drift += (market.drifts[i] - 0.5 * sig * sig) * occ[i];
        var += sig * sig * occ[i];
      }
      const double z =
          (std::log(path.terminal_spot()) - drift) / std::sqrt(var);
      zsum += z;
      z2sum += z * z;
    }
    zsum /= n;
    z2sum /= n;
    CHECK(std::abs(zsum) <= 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(z2sum - 1.0) <= 3.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("discount factors from regime occupation") {
  auto market = single_regime_market(0.3, 0.2);
  const auto path = simulate_asset_path(*single_regime_model(), market,
                                        Measure::RiskNeutral, 0.5, 3);

  CHECK(discount_factor(path, 0.4, 0.4) == doctest::Approx(1.0));
  CHECK(discount_factor(path, 0.0, 1.0) ==
        doctest::Approx(std::exp(-0.3)).epsilon(1e-12));
  CHECK_THROWS_AS(discount_factor(path, 0.5, 1.5), std::invalid_argument);

  SUBCASE("two-regime hand computation") {
    AssetPath two;
    two.segment_start = {0.0, 0.4};
    two.segment_state = {0, 1};
    two.rates = {0.3, 0.6};
    two.horizon = 1.0;
    two.sample_time = {0.0, 1.0};
    two.sample_spot = {1.0, 1.0};
    two.sample_state = {0, 1};
    two.sample_age = {0.0, 0.6};
    // exp(-(0.4 * 0.3 + 0.6 * 0.6)) = exp(-0.48)
    CHECK(discount_factor(two, 0.0, 1.0) ==
          doctest::Approx(std::exp(-0.48)).epsilon(1e-12));
    CHECK(discount_factor(two, 0.0, 1.0) ==
          doctest::Approx(0.618783391806140853).epsilon(1e-12));
  }
}
