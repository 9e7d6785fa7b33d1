#include "regime/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace regime {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double number_field(const json& obj, const std::string& key, double fallback,
                    const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError("'" + key + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

bool bool_field(const json& obj, const std::string& key, bool fallback,
                const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean())
    throw ConfigError("'" + key + "' in " + where + " must be a boolean");
  return obj[key].get<bool>();
}

std::vector<double> number_array(const json& arr, const std::string& where) {
  if (!arr.is_array())
    throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number())
      throw ConfigError(where + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

HoldingLaw parse_holding_law(const json& law, const std::string& where) {
  if (!law.is_object())
    throw ConfigError(where + " must be an object naming a density family");
  reject_unknown_keys(law, {"family", "shape", "rate", "scale"}, where);
  if (!law.contains("family") || !law["family"].is_string())
    throw ConfigError(where + " needs a string 'family'");
  const std::string family = law["family"].get<std::string>();
  try {
    if (family == "exponential")
      return HoldingLaw::exponential(number_field(law, "rate", 1.0, where));
    if (family == "gamma") {
      const double shape = number_field(law, "shape", 1.0, where);
      if (shape != std::floor(shape))
        throw ConfigError(where + ": gamma shape must be a positive integer");
      return HoldingLaw::gamma(static_cast<int>(shape),
                               number_field(law, "rate", 1.0, where));
    }
    if (family == "weibull")
      return HoldingLaw::weibull(number_field(law, "shape", 1.0, where),
                                 number_field(law, "scale", 1.0, where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown family '" + family +
                    "' (exponential | gamma | weibull)");
}

std::shared_ptr<const SemiMarkovModel> parse_model(const json& doc,
                                                   const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown_keys(doc,
                      {"num_states", "transition_matrix", "holding_law",
                       "initial_distribution"},
                      where);
  if (!doc.contains("transition_matrix"))
    throw ConfigError(where + " needs 'transition_matrix'");
  const auto& tm = doc["transition_matrix"];
  if (!tm.is_array() || tm.empty())
    throw ConfigError(where + ".transition_matrix must be a nonempty matrix");
  std::vector<std::vector<double>> matrix;
  for (const auto& row : tm)
    matrix.push_back(number_array(row, where + ".transition_matrix row"));
  const int n = static_cast<int>(matrix.size());
  if (doc.contains("num_states")) {
    const double declared =
        number_field(doc, "num_states", n, where);
    if (declared != n)
      throw ConfigError(where + ": num_states does not match the matrix");
  }

  std::vector<HoldingLaw> laws;
  if (!doc.contains("holding_law"))
    throw ConfigError(where + " needs 'holding_law'");
  const auto& hl = doc["holding_law"];
  if (hl.is_array()) {
    if (static_cast<int>(hl.size()) != n)
      throw ConfigError(where + ".holding_law array needs one law per state");
    for (int i = 0; i < n; ++i)
      laws.push_back(parse_holding_law(hl[i], where + ".holding_law[" +
                                                  std::to_string(i) + "]"));
  } else {
    const HoldingLaw law = parse_holding_law(hl, where + ".holding_law");
    laws.assign(n, law);
  }

  std::vector<double> initial(n, 1.0 / n);
  if (doc.contains("initial_distribution"))
    initial = number_array(doc["initial_distribution"],
                           where + ".initial_distribution");

  try {
    return std::make_shared<SemiMarkovModel>(std::move(matrix),
                                             std::move(laws),
                                             std::move(initial));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

MarketParams parse_market(const json& doc, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown_keys(doc,
                      {"rates", "volatilities", "drifts", "strike", "maturity",
                       "spot"},
                      where);
  MarketParams market;
  if (!doc.contains("rates") || !doc.contains("volatilities"))
    throw ConfigError(where + " needs 'rates' and 'volatilities'");
  market.rates = number_array(doc["rates"], where + ".rates");
  market.volatilities =
      number_array(doc["volatilities"], where + ".volatilities");
  market.drifts = doc.contains("drifts")
                      ? number_array(doc["drifts"], where + ".drifts")
                      : market.rates;
  market.strike = number_field(doc, "strike", 1.0, where);
  market.maturity = number_field(doc, "maturity", 1.0, where);
  market.spot = number_field(doc, "spot", 1.0, where);
  try {
    market.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return market;
}

}  // namespace

std::shared_ptr<const SemiMarkovModel> parse_model_json(
    const std::string& text, const std::string& context) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(context + ": invalid JSON: " + e.what());
  }
  return parse_model(doc, context);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const std::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ConfigError(path + ": config must be an object");
  reject_unknown_keys(
      doc, {"model", "market", "estimation", "solver", "experiment",
            "output_dir"},
      path);

  RunConfig config;
  if (doc.contains("model")) config.model = parse_model(doc["model"], "model");
  if (doc.contains("market"))
    config.market = parse_market(doc["market"], "market");

  if (doc.contains("estimation")) {
    const auto& est = doc["estimation"];
    if (!est.is_object()) throw ConfigError("'estimation' must be an object");
    reject_unknown_keys(est,
                        {"alpha", "tau", "tau_schedule", "seed",
                         "pricing_horizon", "export_points"},
                        "estimation");
    config.estimation.alpha =
        number_field(est, "alpha", config.estimation.alpha, "estimation");
    config.estimation.tau =
        number_field(est, "tau", config.estimation.tau, "estimation");
    if (est.contains("tau_schedule"))
      config.estimation.tau_schedule =
          number_array(est["tau_schedule"], "estimation.tau_schedule");
    if (est.contains("seed")) {
      if (!est["seed"].is_number_unsigned())
        throw ConfigError("estimation.seed must be a nonnegative integer");
      config.estimation.seed = est["seed"].get<std::uint64_t>();
    }
    config.estimation.pricing_horizon = number_field(
        est, "pricing_horizon", config.estimation.pricing_horizon,
        "estimation");
    config.estimation.export_points = static_cast<int>(number_field(
        est, "export_points", config.estimation.export_points, "estimation"));
  }

  if (doc.contains("solver")) {
    const auto& sol = doc["solver"];
    if (!sol.is_object()) throw ConfigError("'solver' must be an object");
    reject_unknown_keys(sol,
                        {"delta_t", "s_max", "delta_s", "theta_scheme",
                         "rannacher_steps", "keep_full_lattice"},
                        "solver");
    config.solver.delta_t =
        number_field(sol, "delta_t", config.solver.delta_t, "solver");
    config.solver.s_max =
        number_field(sol, "s_max", config.solver.s_max, "solver");
    config.solver.delta_s =
        number_field(sol, "delta_s", config.solver.delta_s, "solver");
    config.solver.theta_scheme = number_field(
        sol, "theta_scheme", config.solver.theta_scheme, "solver");
    config.solver.rannacher_steps = static_cast<int>(number_field(
        sol, "rannacher_steps", config.solver.rannacher_steps, "solver"));
    config.solver.keep_full_lattice = bool_field(
        sol, "keep_full_lattice", config.solver.keep_full_lattice, "solver");
  }

  if (doc.contains("experiment")) {
    const auto& exp = doc["experiment"];
    if (!exp.is_object()) throw ConfigError("'experiment' must be an object");
    reject_unknown_keys(exp,
                        {"tau_schedule", "norm_horizon", "spot_lo", "spot_hi",
                         "nested"},
                        "experiment");
    if (exp.contains("tau_schedule"))
      config.experiment.tau_schedule =
          number_array(exp["tau_schedule"], "experiment.tau_schedule");
    config.experiment.norm_horizon = number_field(
        exp, "norm_horizon", config.experiment.norm_horizon, "experiment");
    config.experiment.spot_lo =
        number_field(exp, "spot_lo", config.experiment.spot_lo, "experiment");
    config.experiment.spot_hi =
        number_field(exp, "spot_hi", config.experiment.spot_hi, "experiment");
    config.experiment.nested =
        bool_field(exp, "nested", config.experiment.nested, "experiment");
  }

  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string())
      throw ConfigError("'output_dir' must be a string");
    config.output_dir = doc["output_dir"].get<std::string>();
  }
  return config;
}

}  // namespace regime
