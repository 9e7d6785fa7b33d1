#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regime/pricing.hpp"
#include "regime/semi_markov.hpp"

namespace regime {

// Anything wrong with user-supplied configuration (schema violations, bad
// values, missing files, refusing to overwrite). The CLI maps this to exit
// code 2; all other failures exit 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimationSettings {
  double alpha = 0.3;
  double tau = 0.0;  // single horizon; 0 = unset
  std::vector<double> tau_schedule;
  std::uint64_t seed = 20240601;
  double pricing_horizon = 4.0;  // smoothing extension horizon
  int export_points = 401;       // smoothed-rate CSV mesh
};

struct ExperimentSettings {
  std::vector<double> tau_schedule = {100, 250, 500, 1000, 2000, 4000, 8000};
  double norm_horizon = 4.0;
  double spot_lo = 0.0;
  double spot_hi = 5.0;
  bool nested = false;
};

struct RunConfig {
  std::shared_ptr<const SemiMarkovModel> model;  // null when absent
  std::optional<MarketParams> market;
  EstimationSettings estimation;
  SolverConfig solver;
  ExperimentSettings experiment;
  std::string output_dir = "out";
};

// Parses and schema-validates a config file. Unknown keys anywhere are
// rejected; every value is range-checked on use.
RunConfig load_config(const std::string& path);

// Model document parsing (shared with the `model` config section).
std::shared_ptr<const SemiMarkovModel> parse_model_json(
    const std::string& text, const std::string& context);

}  // namespace regime
