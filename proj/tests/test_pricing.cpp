#include "regime/pricing.hpp"

#include <chrono>
#include <cmath>
#include <doctest.h>

#include "helpers.hpp"
#include "regime/estimation.hpp"
#include "regime/spline.hpp"

using namespace regime;
using regime::testing::example_market;
using regime::testing::example_model;
using regime::testing::single_regime_market;
using regime::testing::single_regime_model;

namespace {

PriceGrid grid_for(const MarketParams& market, double dt, int space_steps,
                   bool full = false) {
  SolverConfig config;
  config.delta_t = dt;
  config.s_max = 8.0 * market.strike;
  config.delta_s = config.s_max / space_steps;
  config.keep_full_lattice = full;
  return PriceGrid::build(market, config);
}

}  // namespace

TEST_CASE("closed-form call values") {
  // Reference digits from an independent high-precision evaluation.
  CHECK(black_scholes_call(1.0, 1.0, 0.3, 0.2, 1.0) ==
        doctest::Approx(0.264208492220486).epsilon(1e-12));
  CHECK(black_scholes_call(0.5, 1.0, 0.3, 0.2, 1.0) ==
        doctest::Approx(0.00112791903831158).epsilon(1e-10));
  CHECK(black_scholes_call(2.0, 1.0, 0.3, 0.2, 1.0) ==
        doctest::Approx(1.25918179487649).epsilon(1e-12));
  CHECK(black_scholes_call(1.0, 1.0, 0.3, 0.2, 0.0) == 0.0);
  CHECK(black_scholes_call(1.7, 1.0, 0.3, 0.2, 0.0) == doctest::Approx(0.7));
  CHECK(black_scholes_call(0.0, 1.0, 0.3, 0.2, 1.0) == 0.0);
  CHECK_THROWS_AS(black_scholes_call(1.0, 1.0, 0.3, 0.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("single-regime solve against the closed form") {
  const auto market = single_regime_market(0.3, 0.2);
  const auto rate = hazard_from_model(single_regime_model());
  const auto grid = grid_for(market, 1.0 / 100, 400);
  const auto surface = solve_pde(market, *rate, grid);

  for (double s : {0.5, 0.75, 1.0, 1.25, 1.5, 2.0}) {
    const double fd = price_at(surface, 0.0, s, 0, 0.0);
    const double bs = black_scholes_call(s, 1.0, 0.3, 0.2, 1.0);
    CHECK(std::abs(fd - bs) <= 1e-3);
  }

  SUBCASE("terminal slice is the payoff exactly") {
    for (int n = 0; n <= grid.num_space_steps; ++n)
      CHECK(surface.value(grid.num_time_steps, n, 0, 0) ==
            std::max(grid.spot(n) - 1.0, 0.0));
  }

  SUBCASE("zero-spot column stays zero") {
    for (int m = 0; m <= grid.num_time_steps; ++m)
      CHECK(surface.value(m, 0, 0, 0) == 0.0);
  }

  SUBCASE("monotone in s and inside the rational bounds") {
    // One implicit step truncates the discount factor at O((r dt)^2); give
    // the lower bound exactly that much room.
    const double slack = 2.0 * std::pow(0.3 * grid.dt, 2) + 1e-9;
    for (int m = 0; m <= grid.num_time_steps; m += 10) {
      const double tt = market.maturity - grid.time(m);
      for (int n = 0; n <= grid.num_space_steps; ++n) {
        const double v = surface.value(m, n, 0, 0);
        const double s = grid.spot(n);
        CHECK(v >= std::max(s - std::exp(-0.3 * tt), 0.0) - slack);
        CHECK(v <= s + 1e-9);
        if (n > 0) CHECK(v >= surface.value(m, n - 1, 0, 0) - 1e-10);
      }
    }
  }

  SUBCASE("nonincreasing in the strike") {
    auto higher = market;
    higher.strike = 1.1;
    SolverConfig config;
    config.delta_t = 1.0 / 100;
    config.s_max = 8.0;
    config.delta_s = 8.0 / 400;
    const auto grid2 = PriceGrid::build(higher, config);
    const auto surface2 = solve_pde(higher, *rate, grid2);
    for (int n = 0; n <= grid.num_space_steps; n += 7)
      CHECK(surface2.value(0, n, 0, 0) <= surface.value(0, n, 0, 0) + 1e-10);
  }
}

TEST_CASE("solver guardrails") {
  const auto market = single_regime_market(0.3, 0.2);

  SUBCASE("s_max below three strikes is rejected") {
    SolverConfig config;
    config.s_max = 2.0;
    CHECK_THROWS_AS(PriceGrid::build(market, config), std::invalid_argument);
  }

  SUBCASE("dt too large for the rate sup is rejected") {
    std::vector<HoldingLaw> laws(2, HoldingLaw::exponential(30.0));
    auto fast = std::make_shared<SemiMarkovModel>(
        std::vector<std::vector<double>>{{0.0, 1.0}, {1.0, 0.0}}, laws,
        std::vector<double>{0.5, 0.5});
    MarketParams market2;
    market2.rates = {0.3, 0.3};
    market2.volatilities = {0.2, 0.2};
    market2.drifts = {0.3, 0.3};
    SolverConfig config;
    config.delta_t = 1.0 / 25;  // dt * sup lambda = 30/25 >= 1
    const auto grid = PriceGrid::build(market2, config);
    CHECK_THROWS_AS(solve_pde(market2, *hazard_from_model(fast), grid),
                    std::runtime_error);
  }
}

TEST_CASE("interpolated lookups") {
  const auto market = example_market();
  const auto rate = hazard_from_model(example_model());
  const auto grid = grid_for(market, 1.0 / 16, 64, /*full=*/true);
  const auto surface = solve_pde(market, *rate, grid);

  SUBCASE("exact at lattice points") {
    for (int m : {0, 5, 16})
      for (int q = 0; q <= m; q += 3)
        for (int n : {0, 10, 32, 64})
          for (int i = 0; i < 3; ++i)
            CHECK(price_at(surface, grid.time(m), grid.spot(n), i,
                           grid.age(q)) ==
                  doctest::Approx(surface.value(m, n, i, q)).epsilon(1e-12));
  }

  SUBCASE("terminal queries return the payoff") {
    CHECK(price_at(surface, 1.0, 1.7, 1, 0.4) ==
          doctest::Approx(0.7).epsilon(1e-12));
    CHECK(price_at(surface, 1.0, 0.6, 2, 1.0) == doctest::Approx(0.0));
  }

  SUBCASE("midpoint in s averages the bracketing lattice values") {
    const double a = surface.value(0, 10, 0, 0);
    const double b = surface.value(0, 11, 0, 0);
    const double mid = 0.5 * (grid.spot(10) + grid.spot(11));
    CHECK(price_at(surface, 0.0, mid, 0, 0.0) ==
          doctest::Approx(0.5 * (a + b)).epsilon(1e-12));
  }

  SUBCASE("out-of-hull queries throw") {
    CHECK_THROWS_AS(price_at(surface, 0.5, 1.0, 0, 0.7),
                    std::out_of_range);  // y > t
    CHECK_THROWS_AS(price_at(surface, 1.5, 1.0, 0, 0.0), std::out_of_range);
    CHECK_THROWS_AS(price_at(surface, 0.5, 9.5, 0, 0.0), std::out_of_range);
    CHECK_THROWS_AS(price_at(surface, 0.5, 1.0, 5, 0.0), std::out_of_range);
  }

  SUBCASE("reduced surfaces refuse positive-age interior queries") {
    const auto thin = solve_pde(market, *rate, grid_for(market, 1.0 / 16, 64));
    CHECK(price_at(thin, 0.0, 1.0, 0, 0.0) ==
          doctest::Approx(price_at(surface, 0.0, 1.0, 0, 0.0)).epsilon(1e-12));
    CHECK_THROWS_AS(price_at(thin, 0.5, 1.0, 0, 0.25), std::runtime_error);
  }
}

TEST_CASE("single-regime surfaces collapse the age axis") {
  const auto market = single_regime_market(0.3, 0.2);
  const auto rate = hazard_from_model(single_regime_model());
  const auto grid = grid_for(market, 1.0 / 32, 64);
  const auto surface = solve_pde(market, *rate, grid);
  CHECK(surface.age_collapsed());
  CHECK(surface.has_full_lattice());
  CHECK(surface.value(10, 32, 0, 10) == surface.value(10, 32, 0, 0));
}

TEST_CASE("identical regimes with identical coupling reduce to one regime") {
  // Equal market parameters and constant rates: the coupling vanishes in
  // the continuum, so the multi-state solve must track the single-regime
  // price up to the semi-implicit coupling's O(dt) footprint.
  MarketParams market;
  market.rates = {0.3, 0.3, 0.3};
  market.volatilities = {0.2, 0.2, 0.2};
  market.drifts = {0.3, 0.3, 0.3};
  std::vector<HoldingLaw> laws(3, HoldingLaw::exponential(0.8));
  auto model = std::make_shared<SemiMarkovModel>(
      std::vector<std::vector<double>>{
          {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}, {0.5, 0.5, 0.0}},
      laws, std::vector<double>(3, 1.0 / 3));
  const auto grid = grid_for(market, 1.0 / 200, 640);
  const auto surface = solve_pde(market, *hazard_from_model(model), grid);
  for (double s : {0.5, 1.0, 1.5, 2.0}) {
    const double bs = black_scholes_call(s, 1.0, 0.3, 0.2, 1.0);
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(price_at(surface, 0.0, s, i, 0.0) - bs) <= 2e-3);
  }
}

TEST_CASE("Monte Carlo pricing") {
  SUBCASE("zero-volatility limit hits the discounted intrinsic value") {
    const auto market = single_regime_market(0.3, 1e-6);
    const auto rate = hazard_from_model(single_regime_model());
    const auto mc =
        monte_carlo_price(market, *rate, 0.0, 1.0, 0, 0.0, 2000, 99);
    CHECK(std::abs(mc.price - 0.259181779318282) <= 1e-4);
  }

  SUBCASE("matches the closed form within three standard errors") {
    const auto market = single_regime_market(0.3, 0.2);
    const auto rate = hazard_from_model(single_regime_model());
    const auto mc =
        monte_carlo_price(market, *rate, 0.0, 1.0, 0, 0.0, 100000, 7, 2);
    const double bs = black_scholes_call(1.0, 1.0, 0.3, 0.2, 1.0);
    CHECK(std::abs(mc.price - bs) <= 3.0 * mc.std_error);
    CHECK(mc.std_error < 2e-3);
  }

  SUBCASE("zero strike prices the spot by the martingale property") {
    auto market = single_regime_market(0.3, 0.2);
    market.strike = 0.0;
    const auto rate = hazard_from_model(single_regime_model());
    const auto mc =
        monte_carlo_price(market, *rate, 0.0, 1.0, 0, 0.0, 50000, 3);
    CHECK(std::abs(mc.price - 1.0) <= 3.0 * mc.std_error);
  }

  SUBCASE("thread count changes nothing but the wall clock") {
    const auto market = example_market();
    const auto rate = hazard_from_model(example_model());
    const auto a =
        monte_carlo_price(market, *rate, 0.0, 1.0, 1, 0.0, 20000, 11, 1);
    const auto b =
        monte_carlo_price(market, *rate, 0.0, 1.0, 1, 0.0, 20000, 11, 2);
    CHECK(a.price == b.price);
    CHECK(a.std_error == b.std_error);
  }

  SUBCASE("too few paths are rejected") {
    const auto market = single_regime_market();
    const auto rate = hazard_from_model(single_regime_model());
    CHECK_THROWS_AS(monte_carlo_price(market, *rate, 0.0, 1.0, 0, 0.0, 50, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("PDE and Monte Carlo agree under an estimated spline rate") {
  // Dual route on the transition-rate-based approximation: solve the system
  // with a smoothed estimated rate and simulate the same rate by thinning.
  const auto model = example_model();
  const auto market = example_market();
  const auto history = simulate_history(*model, 300.0, 23);
  const auto estimate = estimate_rate(history, build_grid(300.0, 0.3), 3);
  const auto smoothed = smooth(estimate, market.maturity);

  const auto grid = grid_for(market, 1.0 / 200, 640);
  const auto surface = solve_pde(market, *smoothed, grid);
  for (int i = 0; i < 3; ++i) {
    const auto mc = monte_carlo_price(market, *smoothed, 0.0, 1.0, i, 0.0,
                                      60000, 1717 + i, 2);
    const double fd = price_at(surface, 0.0, 1.0, i, 0.0);
    CHECK(std::abs(fd - mc.price) <= 3.0 * mc.std_error + 1.5e-3);
  }
}
