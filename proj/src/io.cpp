#include "regime/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace regime {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed number '" + s + "' in " + context);
  }
}

long parse_long(const std::string& s, const std::string& context) {
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed integer '" + s + "' in " + context);
  }
}

}  // namespace

std::string format_g9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// History CSV

void write_history_csv(const std::string& path, const CensoredHistory& h) {
  auto out = open_out(path);
  out << "# tau=" << format_g9(h.horizon) << "\n";
  out << "index,state,holding_time\n";
  for (int l = 0; l < h.num_transitions(); ++l)
    out << l + 1 << "," << h.states[l] + 1 << ","
        << format_g9(h.holding_times[l]) << "\n";
  out << "censored," << h.states[h.num_transitions()] + 1 << ","
      << format_g9(h.backward_recurrence) << "\n";
}

CensoredHistory read_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  CensoredHistory h;
  bool have_tau = false, have_header = false, have_footer = false;
  std::vector<int> from_states;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      const auto eq = line.find("tau=");
      if (eq != std::string::npos) {
        h.horizon = parse_double(line.substr(eq + 4), path);
        have_tau = true;
      }
      continue;
    }
    const auto fields = split_csv(line);
    if (!have_header) {
      if (fields.size() != 3 || fields[0] != "index" || fields[1] != "state" ||
          fields[2] != "holding_time")
        throw std::runtime_error("bad history header in " + path);
      have_header = true;
      continue;
    }
    if (fields.size() != 3)
      throw std::runtime_error("bad history row in " + path + ": " + line);
    if (fields[0] == "censored") {
      from_states.push_back(static_cast<int>(parse_long(fields[1], path)) - 1);
      h.backward_recurrence = parse_double(fields[2], path);
      have_footer = true;
      break;
    }
    from_states.push_back(static_cast<int>(parse_long(fields[1], path)) - 1);
    h.holding_times.push_back(parse_double(fields[2], path));
  }
  if (!have_tau) throw std::runtime_error("missing '# tau=' line in " + path);
  if (!have_footer)
    throw std::runtime_error("missing 'censored' footer row in " + path);
  h.states = std::move(from_states);
  h.validate();
  return h;
}

// ---------------------------------------------------------------------------
// Estimate CSV

void write_estimate_csv(const std::string& path, const StepRateEstimate& e) {
  auto out = open_out(path);
  out << "i,j,k,v_k,d,v,lambda_hat\n";
  const auto& grid = e.grid();
  const int ns = e.num_states();
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) {
      if (j == i) continue;
      const int p = pair_index(ns, i, j);
      for (long k = 0; k < grid.num_cells; ++k)
        out << i + 1 << "," << j + 1 << "," << k << ","
            << format_g9(grid.knot(k)) << "," << e.counts[p][k] << ","
            << format_g9(e.occupancies[i][k]) << ","
            << format_g9(e.rate->cell_value(i, j, k)) << "\n";
    }
}

StepRateEstimate read_estimate_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) ||
      split_csv(line) !=
          std::vector<std::string>{"i", "j", "k", "v_k", "d", "v",
                                   "lambda_hat"})
    throw std::runtime_error("bad estimate header in " + path);

  struct Row {
    int i, j;
    long k;
    double v_k;
    long long d;
    double v, lambda;
  };
  std::vector<Row> rows;
  int max_state = 0;
  long max_cell = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r" || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (f.size() != 7)
      throw std::runtime_error("bad estimate row in " + path + ": " + line);
    Row r;
    r.i = static_cast<int>(parse_long(f[0], path)) - 1;
    r.j = static_cast<int>(parse_long(f[1], path)) - 1;
    r.k = parse_long(f[2], path);
    r.v_k = parse_double(f[3], path);
    r.d = parse_long(f[4], path);
    r.v = parse_double(f[5], path);
    r.lambda = parse_double(f[6], path);
    if (r.i < 0 || r.j < 0 || r.i == r.j || r.k < 0)
      throw std::runtime_error("bad estimate indices in " + path);
    max_state = std::max({max_state, r.i, r.j});
    max_cell = std::max(max_cell, r.k);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error("empty estimate file " + path);

  const int ns = max_state + 1;
  EstimationGrid grid;
  grid.num_cells = max_cell + 1;
  // Recover the cell width from any nonzero knot.
  grid.step = 0.0;
  for (const auto& r : rows)
    if (r.k > 0) {
      grid.step = r.v_k / static_cast<double>(r.k);
      break;
    }
  if (grid.step <= 0.0)
    throw std::runtime_error("cannot recover grid step from " + path);
  grid.horizon = grid.step * static_cast<double>(grid.num_cells);
  grid.alpha = std::numeric_limits<double>::quiet_NaN();  // not recoverable

  std::vector<std::vector<double>> values(
      num_pairs(ns), std::vector<double>(grid.num_cells, 0.0));
  StepRateEstimate est;
  est.counts.assign(num_pairs(ns),
                    std::vector<long long>(grid.num_cells, 0));
  est.occupancies.assign(ns, std::vector<double>(grid.num_cells, 0.0));
  for (const auto& r : rows) {
    const int p = pair_index(ns, r.i, r.j);
    values[p][r.k] = r.lambda;
    est.counts[p][r.k] = r.d;
    est.occupancies[r.i][r.k] = r.v;
  }
  est.rate = std::make_shared<StepRate>(grid, ns, std::move(values));
  return est;
}

// ---------------------------------------------------------------------------
// Smoothed CSV, diagnostics JSON

void write_smoothed_csv(const std::string& path, const SmoothedRate& s,
                        double y_max, int points) {
  if (points < 2 || !(y_max > 0.0))
    throw std::invalid_argument("write_smoothed_csv: bad mesh");
  auto out = open_out(path);
  out << "i,j,y,lambda_tilde\n";
  const int ns = s.num_states();
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) {
      if (j == i) continue;
      for (int q = 0; q < points; ++q) {
        const double y = y_max * q / (points - 1);
        out << i + 1 << "," << j + 1 << "," << format_g9(y) << ","
            << format_g9(s.rate(i, j, y)) << "\n";
      }
    }
}

void write_diagnostics_json(const std::string& path,
                            const TbaDiagnostics& d) {
  auto out = open_out(path);
  out << "{\n  \"c1\": " << (d.c1 ? "true" : "false") << ",\n  \"tail\": [";
  for (std::size_t i = 0; i < d.positive_tail.size(); ++i)
    out << (i ? ", " : "") << (d.positive_tail[i] ? "true" : "false");
  out << "],\n  \"irreducible\": " << (d.irreducible ? "true" : "false")
      << ",\n  \"p_hat\": [";
  for (std::size_t i = 0; i < d.p_hat.size(); ++i) {
    out << (i ? ", " : "") << "[";
    for (std::size_t j = 0; j < d.p_hat[i].size(); ++j)
      out << (j ? ", " : "") << format_g9(d.p_hat[i][j]);
    out << "]";
  }
  out << "],\n  \"row_sums\": [";
  for (std::size_t i = 0; i < d.row_sums.size(); ++i)
    out << (i ? ", " : "") << format_g9(d.row_sums[i]);
  out << "]\n}\n";
}

// ---------------------------------------------------------------------------
// Surface CSV

void write_surface_csv(const std::string& path, const PriceSurface& s) {
  auto out = open_out(path);
  out << "t,s,i,y,phi\n";
  const auto& grid = s.grid();
  for (int m = 0; m <= grid.num_time_steps; ++m) {
    const int q_top = s.has_full_lattice() && !s.age_collapsed() ? m : 0;
    for (int i = 0; i < grid.num_states; ++i)
      for (int q = 0; q <= q_top; ++q)
        for (int n = 0; n <= grid.num_space_steps; ++n)
          out << format_g9(grid.time(m)) << "," << format_g9(grid.spot(n))
              << "," << i + 1 << "," << format_g9(grid.age(q)) << ","
              << format_g9(s.value(m, n, i, q)) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Report CSVs

void write_report_csv(const std::string& path, const ConvergenceReport& r) {
  auto out = open_out(path);
  out << "kind,tau,state,sup_error,l2_error,trend_a,trend_b\n";
  for (const auto& row : r.rows) {
    const TrendFit* fit = r.sup_trend(row.kind, row.state);
    out << row.kind << "," << format_g9(row.tau) << "," << row.state << ","
        << format_g9(row.sup_error) << "," << format_g9(row.l2_error) << ",";
    if (fit)
      out << format_g9(fit->intercept) << "," << format_g9(fit->slope);
    else
      out << ",";
    out << "\n";
  }
}

void write_pair_errors_csv(const std::string& path,
                           const ConvergenceReport& r) {
  auto out = open_out(path);
  out << "tau,i,j,sup_error,l2_error\n";
  for (const auto& row : r.pair_rows)
    out << format_g9(row.tau) << "," << row.i << "," << row.j << ","
        << format_g9(row.sup_error) << "," << format_g9(row.l2_error) << "\n";
}

}  // namespace regime
