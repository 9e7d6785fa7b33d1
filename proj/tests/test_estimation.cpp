#include "regime/estimation.hpp"

#include <cmath>
#include <doctest.h>

#include "helpers.hpp"

using namespace regime;
using regime::testing::example_model;
using regime::testing::worked_history;

TEST_CASE("likelihood grid construction") {
  const auto g = build_grid(4.0, 0.25);
  CHECK(g.num_cells == 5);  // floor(4^1.25)
  CHECK(g.step == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(g.knot(5) == doctest::Approx(4.0).epsilon(1e-15));

  const auto g2 = build_grid(100.0, 0.25);
  CHECK(g2.num_cells == 316);  // floor(100^1.25)
  CHECK(g2.step == doctest::Approx(0.316455696202531646).epsilon(1e-12));

  CHECK_THROWS_AS(build_grid(100.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(100.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(100.0, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(0.0, 0.25), std::invalid_argument);
}

TEST_CASE("cell membership uses half-open intervals (v_k, v_{k+1}]") {
  const auto g = build_grid(4.0, 0.25);  // knots 0, 0.8, 1.6, 2.4, 3.2, 4
  CHECK(g.cell_of(0.0) == 0);
  CHECK(g.cell_of(0.5) == 0);
  CHECK(g.cell_of(0.8) == 0);   // boundary belongs to the lower cell
  CHECK(g.cell_of(0.80001) == 1);
  CHECK(g.cell_of(1.6) == 1);
  CHECK(g.cell_of(4.0) == 4);
}

TEST_CASE("hand-traced counting statistics") {
  const auto g = build_grid(4.0, 0.25);
  const auto h = worked_history();
  const auto stats = count_statistics(h, g, 3);

  const int p13 = pair_index(3, 0, 2);
  const int p31 = pair_index(3, 2, 0);
  CHECK(stats.counts[p13][0] == 1);  // Y1 = 0.5 in (0, 0.8]
  CHECK(stats.counts[p31][1] == 1);  // Y2 = 1.2 in (0.8, 1.6]
  long long total = 0;
  for (const auto& row : stats.counts)
    for (long long d : row) total += d;
  CHECK(total == 2);

  // State-1 occupancies: the 0.5 sojourn plus the censored 2.3 sojourn.
  CHECK(stats.occupancies[0][0] == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(stats.occupancies[0][1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(stats.occupancies[0][2] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(stats.occupancies[0][3] == doctest::Approx(0.0));
  // State-3 occupancies from the 1.2 sojourn.
  CHECK(stats.occupancies[2][0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(stats.occupancies[2][1] == doctest::Approx(0.4).epsilon(1e-12));

  SUBCASE("occupancies add up to the horizon") {
    double sum = 0.0;
    for (const auto& row : stats.occupancies)
      for (double v : row) sum += v;
    CHECK(sum == doctest::Approx(4.0).epsilon(1e-12));
  }

  SUBCASE("horizon mismatch is rejected") {
    const auto g8 = build_grid(8.0, 0.25);
    CHECK_THROWS_AS(count_statistics(h, g8, 3), std::invalid_argument);
  }
}

TEST_CASE("empty history occupies every cell of the starting state") {
  const auto g = build_grid(4.0, 0.25);
  CensoredHistory h;
  h.states = {1};
  h.backward_recurrence = 4.0;
  h.horizon = 4.0;
  const auto stats = count_statistics(h, g, 3);
  for (const auto& row : stats.counts)
    for (long long d : row) CHECK(d == 0);
  for (long k = 0; k < g.num_cells; ++k)
    CHECK(stats.occupancies[1][k] == doctest::Approx(g.step).epsilon(1e-12));
}

TEST_CASE("MLE step estimate from the hand trace") {
  const auto g = build_grid(4.0, 0.25);
  const auto est = estimate_rate(worked_history(), g, 3);

  CHECK(est.rate->cell_value(0, 2, 0) ==
        doctest::Approx(1.0 / 1.3).epsilon(1e-12));
  CHECK(est.rate->cell_value(2, 0, 1) == doctest::Approx(2.5).epsilon(1e-12));
  // v = 0 cells produce zero, not NaN.
  CHECK(est.rate->cell_value(0, 2, 3) == 0.0);
  // Evaluation at y = 0 returns the k = 0 value (the point mass at zero).
  CHECK(est.rate->rate(0, 2, 0.0) == doctest::Approx(1.0 / 1.3));
  // Half-open evaluation.
  CHECK(est.rate->rate(2, 0, 0.8) == est.rate->cell_value(2, 0, 0));
  CHECK(est.rate->rate(2, 0, 1.2) == doctest::Approx(2.5));

  SUBCASE("step cumulative hazard integrates the rectangles") {
    // Lambda_1(y) for state 1: cells 0..2 have total rates
    // (1/1.3, 0, 0, ...) over width 0.8.
    CHECK(est.rate->cumulative_hazard(0, 0.4) ==
          doctest::Approx(0.4 / 1.3).epsilon(1e-12));
    CHECK(est.rate->cumulative_hazard(0, 2.0) ==
          doctest::Approx(0.8 / 1.3).epsilon(1e-12));
  }
}

TEST_CASE("count conservation on simulated histories") {
  const auto model = example_model();
  for (std::uint64_t seed : {10, 20, 30}) {
    const double tau = 150.0;
    const auto h = simulate_history(*model, tau, seed);
    const auto g = build_grid(tau, 0.3);
    const auto est = estimate_rate(h, g, 3);
    long long transitions = 0;
    for (const auto& row : est.counts)
      for (long long d : row) transitions += d;
    CHECK(transitions == h.num_transitions());
    double occupancy = 0.0;
    for (const auto& row : est.occupancies)
      for (double v : row) occupancy += v;
    CHECK(occupancy == doctest::Approx(tau).epsilon(1e-9));
    for (const auto& row : est.rate->pair_values(0, 1))
      CHECK(row >= 0.0);
  }
}

TEST_CASE("projection samples the rate at left endpoints") {
  const auto g = build_grid(4.0, 0.25);
  const auto rate = hazard_from_model(example_model());
  const auto proj = project_true_rate(*rate, g);

  // lambda*_13 on cell 1 is lambda_13(v_1) = 0.9 * 0.8 / 1.8.
  CHECK(proj.rate->cell_value(0, 2, 1) ==
        doctest::Approx(0.4).epsilon(1e-12));
  // Cell 0 samples the origin where the hazard vanishes.
  CHECK(proj.rate->cell_value(0, 2, 0) == 0.0);

  SUBCASE("constant rates project to themselves") {
    std::vector<HoldingLaw> laws(2, HoldingLaw::exponential(0.7));
    auto markov = std::make_shared<SemiMarkovModel>(
        std::vector<std::vector<double>>{{0.0, 1.0}, {1.0, 0.0}}, laws,
        std::vector<double>{0.5, 0.5});
    const auto markov_rate = hazard_from_model(markov);
    const auto markov_proj = project_true_rate(*markov_rate, g);
    for (long k = 0; k < g.num_cells; ++k)
      CHECK(markov_proj.rate->cell_value(0, 1, k) ==
            doctest::Approx(0.7).epsilon(1e-12));
  }
}

TEST_CASE("error norms") {
  const auto g = build_grid(4.0, 0.25);
  const auto est = estimate_rate(worked_history(), g, 3);

  SUBCASE("identical inputs give zero") {
    const auto norms = error_norms(*est.rate, *est.rate, 4.0, 101);
    CHECK(norms.sup == 0.0);
    CHECK(norms.l2 == 0.0);
  }

  SUBCASE("constant difference c on [0, 1] gives (c, c)") {
    EstimationGrid unit;
    unit.horizon = 1.0;
    unit.alpha = 0.25;
    unit.num_cells = 1;
    unit.step = 1.0;
    const StepRate zero(unit, 2, {{0.0}, {0.0}});
    const StepRate constant(unit, 2, {{0.25}, {0.25}});
    const auto norms = error_norms(zero, constant, 1.0, 101);
    CHECK(norms.sup == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(norms.l2 == doctest::Approx(0.25).epsilon(1e-6));
  }

  SUBCASE("per-pair norms accompany the aggregate") {
    const auto proj = project_true_rate(*hazard_from_model(example_model()), g);
    const auto norms = error_norms(*est.rate, *proj.rate, 4.0, 101);
    CHECK(norms.pairs.size() == 6);
    double worst = 0.0;
    for (const auto& p : norms.pairs) worst = std::max(worst, p.sup);
    CHECK(norms.sup == doctest::Approx(worst));
    CHECK_THROWS_AS(error_norms(*est.rate, *proj.rate, 4.0, 1),
                    std::invalid_argument);
  }
}

TEST_CASE("constant-hazard special case recovers the Markov rates") {
  // Two-state Markov chain: exit rate 0.5 from each state, so
  // lambda_12 = lambda_21 = 0.5 at every age. A small alpha keeps the cells
  // wide enough that each holds many transitions at tau = 1e4.
  std::vector<HoldingLaw> laws(2, HoldingLaw::exponential(0.5));
  auto markov = std::make_shared<SemiMarkovModel>(
      std::vector<std::vector<double>>{{0.0, 1.0}, {1.0, 0.0}}, laws,
      std::vector<double>{0.5, 0.5});
  const double tau = 1e4;
  const auto h = simulate_history(*markov, tau, 321);
  const auto g = build_grid(tau, 0.05);
  const auto est = estimate_rate(h, g, 2);

  for (long k = 0; k < g.num_cells && g.knot(k) < 2.0; ++k) {
    CHECK(std::abs(est.rate->cell_value(0, 1, k) - 0.5) <= 0.15 * 0.5);
    CHECK(std::abs(est.rate->cell_value(1, 0, k) - 0.5) <= 0.15 * 0.5);
  }
}
