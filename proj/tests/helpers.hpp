#pragma once

#include <memory>

#include "regime/semi_markov.hpp"

namespace regime::testing {

// Three-state example: holding density y e^{-y} in every state and the
// transition matrix used throughout the convergence experiments.
inline std::shared_ptr<const SemiMarkovModel> example_model() {
  std::vector<std::vector<double>> p = {
      {0.0, 0.1, 0.9}, {0.4, 0.0, 0.6}, {0.7, 0.3, 0.0}};
  std::vector<HoldingLaw> laws(3, HoldingLaw::gamma(2, 1.0));
  return std::make_shared<SemiMarkovModel>(p, laws,
                                           std::vector<double>(3, 1.0 / 3));
}

inline MarketParams example_market() {
  MarketParams m;
  m.rates = {0.3, 0.6, 0.7};
  m.volatilities = {0.2, 0.2, 0.2};
  m.drifts = {0.3, 0.6, 0.7};
  m.strike = 1.0;
  m.maturity = 1.0;
  m.spot = 1.0;
  return m;
}

inline std::shared_ptr<const SemiMarkovModel> single_regime_model() {
  return std::make_shared<SemiMarkovModel>(
      std::vector<std::vector<double>>{{0.0}},
      std::vector<HoldingLaw>{HoldingLaw::exponential(1.0)},
      std::vector<double>{1.0});
}

inline MarketParams single_regime_market(double r = 0.3, double sigma = 0.2) {
  MarketParams m;
  m.rates = {r};
  m.volatilities = {sigma};
  m.drifts = {r};
  m.strike = 1.0;
  m.maturity = 1.0;
  m.spot = 1.0;
  return m;
}

// The worked estimation example: tau = 4, X = (1, 3, 1), Y = (0.5, 1.2),
// U = 2.3 (states written 1-based here, stored 0-based).
inline CensoredHistory worked_history() {
  CensoredHistory h;
  h.states = {0, 2, 0};
  h.holding_times = {0.5, 1.2};
  h.backward_recurrence = 2.3;
  h.horizon = 4.0;
  return h;
}

}  // namespace regime::testing
