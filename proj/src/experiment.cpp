#include "regime/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "regime/threading.hpp"

namespace regime {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

void ExperimentPlan::validate() const {
  if (!model) throw std::invalid_argument("experiment: model is required");
  market.validate();
  if (market.num_states() != model->num_states())
    throw std::invalid_argument("experiment: market/model state mismatch");
  if (tau_schedule.empty())
    throw std::invalid_argument("experiment: tau schedule is empty");
  for (std::size_t k = 0; k + 1 < tau_schedule.size(); ++k)
    if (!(tau_schedule[k] < tau_schedule[k + 1]))
      throw std::invalid_argument(
          "experiment: tau schedule must be strictly increasing");
  if (tau_schedule.front() < market.maturity)
    throw std::invalid_argument(
        "experiment: smallest tau must reach the maturity");
  if (tau_schedule.front() < norm_horizon)
    throw std::invalid_argument(
        "experiment: smallest tau must reach the norm horizon");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("experiment: alpha must lie in (0, 1/2)");
  if (!seeds.empty() && seeds.size() != tau_schedule.size())
    throw std::invalid_argument(
        "experiment: need one seed per tau (or none for derived seeds)");
  if (!(spot_lo >= 0.0 && spot_hi > spot_lo))
    throw std::invalid_argument("experiment: bad spot window");
}

const TrendFit* ConvergenceReport::sup_trend(const std::string& kind,
                                             int state) const {
  auto it = sup_trends.find(trend_key(kind, state));
  return it == sup_trends.end() ? nullptr : &it->second;
}

const TrendFit* ConvergenceReport::l2_trend(const std::string& kind,
                                            int state) const {
  auto it = l2_trends.find(trend_key(kind, state));
  return it == l2_trends.end() ? nullptr : &it->second;
}

TrendFit fit_log_trend(const std::vector<std::pair<double, double>>& rows) {
  if (rows.size() < 2)
    throw std::invalid_argument("fit_log_trend: need at least two points");
  double n = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (const auto& [tau, err] : rows) {
    const double x = std::log(tau);
    n += 1.0;
    sx += x;
    sxx += x * x;
    sy += err;
    sxy += x * err;
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-12 * std::max(1.0, n * sxx))
    throw std::invalid_argument("fit_log_trend: degenerate design (equal taus)");
  TrendFit fit;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0.0;
  for (const auto& [tau, err] : rows) {
    const double r = err - fit.intercept - fit.slope * std::log(tau);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss);
  return fit;
}

namespace {

std::vector<std::uint64_t> effective_seeds(const ExperimentPlan& plan) {
  if (!plan.seeds.empty()) return plan.seeds;
  std::vector<std::uint64_t> seeds(plan.tau_schedule.size());
  for (std::size_t k = 0; k < seeds.size(); ++k)
    seeds[k] = derive_seed(20240601ULL, k);
  return seeds;
}

CensoredHistory history_for(const ExperimentPlan& plan, double tau,
                            std::uint64_t seed,
                            const CensoredHistory* master) {
  if (plan.nested && master) return truncate_history(*master, tau);
  return simulate_history(*plan.model, tau, seed);
}

void add_trend(ConvergenceReport& report, const std::string& kind, int state) {
  std::vector<std::pair<double, double>> sup_pts, l2_pts;
  for (const auto& row : report.rows)
    if (row.kind == kind && row.state == state) {
      sup_pts.emplace_back(row.tau, row.sup_error);
      l2_pts.emplace_back(row.tau, row.l2_error);
    }
  if (sup_pts.size() < 2) {
    report.warnings.push_back("no trend fit for " + kind + "/" +
                              std::to_string(state) +
                              ": fewer than two tau values");
    return;
  }
  const std::string key = ConvergenceReport::trend_key(kind, state);
  report.sup_trends[key] = fit_log_trend(sup_pts);
  report.l2_trends[key] = fit_log_trend(l2_pts);
}

}  // namespace

ConvergenceReport run_rate_convergence(const ExperimentPlan& plan) {
  plan.validate();
  const auto seeds = effective_seeds(plan);
  const auto true_rate = hazard_from_model(plan.model);
  const int nt = static_cast<int>(plan.tau_schedule.size());

  CensoredHistory master;
  if (plan.nested)
    master = simulate_history(*plan.model, plan.tau_schedule.back(), seeds[0]);

  struct PerTau {
    ErrorNorms vs_projection, vs_true, smoothed_vs_true;
  };
  std::vector<PerTau> results(nt);
  parallel_chunks(nt, 1, plan.threads, [&](long, long begin, long end) {
    for (long k = begin; k < end; ++k) {
      const double tau = plan.tau_schedule[k];
      const auto history = history_for(plan, tau, seeds[k],
                                       plan.nested ? &master : nullptr);
      const auto grid = build_grid(tau, plan.alpha);
      const auto estimate =
          estimate_rate(history, grid, plan.model->num_states());
      const auto projection = project_true_rate(*true_rate, grid);
      const auto smoothed = smooth(estimate, plan.norm_horizon);
      results[k].vs_projection = error_norms(
          *estimate.rate, *projection.rate, plan.norm_horizon, 401);
      results[k].vs_true =
          error_norms(*estimate.rate, *true_rate, plan.norm_horizon, 401);
      results[k].smoothed_vs_true =
          error_norms(*smoothed, *true_rate, plan.norm_horizon, 401);
    }
  });

  ConvergenceReport report;
  for (int k = 0; k < nt; ++k) {
    const double tau = plan.tau_schedule[k];
    report.rows.push_back({"rate_vs_projection", tau, 0,
                           results[k].vs_projection.sup,
                           results[k].vs_projection.l2});
    report.rows.push_back(
        {"rate_vs_true", tau, 0, results[k].vs_true.sup,
         results[k].vs_true.l2});
    report.rows.push_back({"smoothed_vs_true", tau, 0,
                           results[k].smoothed_vs_true.sup,
                           results[k].smoothed_vs_true.l2});
    for (const auto& pair : results[k].vs_projection.pairs)
      report.pair_rows.push_back(
          {tau, pair.i + 1, pair.j + 1, pair.sup, pair.l2});
  }
  add_trend(report, "rate_vs_projection", 0);
  add_trend(report, "rate_vs_true", 0);
  add_trend(report, "smoothed_vs_true", 0);
  return report;
}

namespace {

std::vector<PriceErrorRow> price_error_from_surfaces(
    const ExperimentPlan& plan, const PriceSurface& with_true,
    const PriceSurface& with_estimate, bool tba_ok) {
  const auto& grid = with_true.grid();
  const int lo = static_cast<int>(std::ceil(plan.spot_lo / grid.ds - 1e-9));
  const int hi = std::min(grid.num_space_steps,
                          static_cast<int>(std::floor(plan.spot_hi / grid.ds +
                                                      1e-9)));
  std::vector<PriceErrorRow> rows;
  for (int i = 0; i < grid.num_states; ++i) {
    double sup = 0.0, l2sq = 0.0, prev = 0.0;
    for (int n = lo; n <= hi; ++n) {
      const double d =
          std::abs(with_true.value(0, n, i, 0) - with_estimate.value(0, n, i, 0));
      sup = std::max(sup, d);
      if (n > lo) l2sq += 0.5 * (prev * prev + d * d) * grid.ds;
      prev = d;
    }
    rows.push_back({i + 1, sup, std::sqrt(l2sq), tba_ok});
  }
  return rows;
}

}  // namespace

std::vector<PriceErrorRow> price_error(const ExperimentPlan& plan, double tau,
                                       std::uint64_t seed,
                                       const PriceSurface* true_surface) {
  plan.validate();
  if (tau < plan.market.maturity)
    throw std::invalid_argument("price_error: tau must reach the maturity");
  const auto grid = PriceGrid::build(plan.market, plan.solver);
  const auto true_rate = hazard_from_model(plan.model);

  PriceSurface own_true;
  if (!true_surface) {
    own_true = solve_pde(plan.market, *true_rate, grid);
    true_surface = &own_true;
  }

  const auto history = simulate_history(*plan.model, tau, seed);
  const auto est_grid = build_grid(tau, plan.alpha);
  const auto estimate =
      estimate_rate(history, est_grid, plan.model->num_states());
  const auto smoothed = smooth(estimate, plan.market.maturity);
  const auto diag = validate_tba_conditions(*smoothed);
  const auto with_estimate = solve_pde(plan.market, *smoothed, grid);
  return price_error_from_surfaces(plan, *true_surface, with_estimate,
                                   diag.all_pass());
}

ConvergenceReport run_price_convergence(const ExperimentPlan& plan) {
  plan.validate();
  const auto seeds = effective_seeds(plan);
  const auto grid = PriceGrid::build(plan.market, plan.solver);
  const auto true_rate = hazard_from_model(plan.model);
  const auto true_surface = solve_pde(plan.market, *true_rate, grid);
  const int nt = static_cast<int>(plan.tau_schedule.size());
  const int nstates = plan.model->num_states();

  CensoredHistory master;
  if (plan.nested)
    master = simulate_history(*plan.model, plan.tau_schedule.back(), seeds[0]);

  std::vector<std::vector<PriceErrorRow>> results(nt);
  parallel_chunks(nt, 1, plan.threads, [&](long, long begin, long end) {
    for (long k = begin; k < end; ++k) {
      const double tau = plan.tau_schedule[k];
      const auto history = history_for(plan, tau, seeds[k],
                                       plan.nested ? &master : nullptr);
      const auto est_grid = build_grid(tau, plan.alpha);
      const auto estimate = estimate_rate(history, est_grid, nstates);
      const auto smoothed = smooth(estimate, plan.market.maturity);
      const auto diag = validate_tba_conditions(*smoothed);
      const auto with_estimate = solve_pde(plan.market, *smoothed, grid);
      results[k] = price_error_from_surfaces(plan, true_surface, with_estimate,
                                             diag.all_pass());
    }
  });

  ConvergenceReport report;
  for (int k = 0; k < nt; ++k) {
    const double tau = plan.tau_schedule[k];
    double max_sup = 0.0, max_l2 = 0.0;
    for (const auto& row : results[k]) {
      report.rows.push_back({"price", tau, row.state, row.sup_error,
                             row.l2_error});
      max_sup = std::max(max_sup, row.sup_error);
      max_l2 = std::max(max_l2, row.l2_error);
      if (!row.tba_ok)
        report.warnings.push_back(
            "tba diagnostics failed at tau=" + fmt("%.9g", tau) + " state=" +
            std::to_string(row.state));
    }
    report.rows.push_back({"price", tau, 0, max_sup, max_l2});
  }
  for (int i = 0; i <= nstates; ++i) add_trend(report, "price", i);
  return report;
}

ConvergenceReport run_full_experiment(const ExperimentPlan& plan) {
  ConvergenceReport report = run_rate_convergence(plan);
  ConvergenceReport price = run_price_convergence(plan);
  report.rows.insert(report.rows.end(), price.rows.begin(), price.rows.end());
  report.sup_trends.insert(price.sup_trends.begin(), price.sup_trends.end());
  report.l2_trends.insert(price.l2_trends.begin(), price.l2_trends.end());
  report.warnings.insert(report.warnings.end(), price.warnings.begin(),
                         price.warnings.end());
  return report;
}

// ---------------------------------------------------------------------------
// SVG plots

namespace {

struct Series {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;  // (tau, error)
  const TrendFit* trend = nullptr;
};

const char* kPalette[8] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string svg_plot(const std::string& title,
                     const std::vector<Series>& series) {
  const double width = 720, height = 460;
  const double ml = 70, mr = 24, mt = 40, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  for (const auto& s : series)
    for (const auto& [tau, err] : s.points) {
      xmin = std::min(xmin, tau);
      xmax = std::max(xmax, tau);
      ymax = std::max(ymax, err);
    }
  if (!(xmax > 0.0)) throw std::invalid_argument("emit_plots: empty series");
  if (xmax == xmin) xmax = xmin * 1.5;
  if (ymax <= 0.0) ymax = 1.0;
  ymax *= 1.08;
  const double lx0 = std::log(xmin), lx1 = std::log(xmax);

  auto X = [&](double tau) {
    return ml + (std::log(tau) - lx0) / (lx1 - lx0) * pw;
  };
  auto Y = [&](double err) { return mt + (1.0 - err / ymax) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << title
      << "</text>\n";
  // Axes.
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">observation horizon tau (log scale)</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << mt + ph / 2 << ")\">error norm</text>\n";
  // X ticks at the data horizons of the first series.
  if (!series.empty())
    for (const auto& [tau, err] : series.front().points) {
      (void)err;
      const double x = X(tau);
      svg << "<line x1=\"" << fmt("%.2f", x) << "\" y1=\"" << mt + ph
          << "\" x2=\"" << fmt("%.2f", x) << "\" y2=\"" << mt + ph + 5
          << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << mt + ph + 20
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\">"
          << fmt("%.9g", tau) << "</text>\n";
    }
  // Y ticks.
  for (int k = 0; k <= 5; ++k) {
    const double v = ymax * k / 5.0;
    const double y = Y(v);
    svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt("%.2f", y)
        << "\" x2=\"" << ml << "\" y2=\"" << fmt("%.2f", y)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << ml - 9 << "\" y=\"" << fmt("%.2f", y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt("%.3g", v) << "</text>\n";
  }
  // Series: markers plus fitted trend.
  for (const auto& s : series) {
    if (s.trend) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-dasharray=\"6 3\" points=\"";
      for (int k = 0; k <= 48; ++k) {
        const double lt = lx0 + (lx1 - lx0) * k / 48.0;
        const double v =
            std::max(0.0, s.trend->intercept + s.trend->slope * lt);
        svg << fmt("%.2f", ml + (lt - lx0) / (lx1 - lx0) * pw) << ","
            << fmt("%.2f", Y(std::min(v, ymax))) << " ";
      }
      svg << "\"/>\n";
    }
    for (const auto& [tau, err] : s.points)
      svg << "<circle cx=\"" << fmt("%.2f", X(tau)) << "\" cy=\""
          << fmt("%.2f", Y(err)) << "\" r=\"3.5\" fill=\"" << s.color
          << "\"/>\n";
  }
  // Legend.
  double ly = mt + 8;
  for (const auto& s : series) {
    svg << "<circle cx=\"" << ml + pw - 170 << "\" cy=\"" << fmt("%.2f", ly)
        << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
    svg << "<text x=\"" << ml + pw - 160 << "\" y=\"" << fmt("%.2f", ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name
        << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

void collect_series(const ConvergenceReport& report, const std::string& kind,
                    int state, const std::string& label, int color,
                    std::vector<Series>& out, bool l2) {
  Series s;
  s.name = label;
  s.color = kPalette[color % 8];
  for (const auto& row : report.rows)
    if (row.kind == kind && row.state == state)
      s.points.emplace_back(row.tau, l2 ? row.l2_error : row.sup_error);
  if (s.points.empty()) return;
  s.trend = l2 ? report.l2_trend(kind, state) : report.sup_trend(kind, state);
  out.push_back(std::move(s));
}

}  // namespace

std::vector<std::string> emit_plots(const ConvergenceReport& report,
                                    const std::string& directory) {
  if (report.rows.empty())
    throw std::invalid_argument("emit_plots: report is empty");
  std::filesystem::create_directories(directory);
  std::vector<std::string> written;

  std::vector<Series> rate_series;
  collect_series(report, "rate_vs_projection", 0, "sup norm", 0, rate_series,
                 false);
  collect_series(report, "rate_vs_projection", 0, "L2 norm", 1, rate_series,
                 true);
  if (!rate_series.empty()) {
    const std::string path = directory + "/rate_convergence.svg";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_plots: cannot write " + path);
    out << svg_plot("Convergence of the rate estimate", rate_series);
    written.push_back(path);
  }

  std::vector<Series> price_series;
  int nstates = 0;
  for (const auto& row : report.rows)
    if (row.kind == "price") nstates = std::max(nstates, row.state);
  for (int i = 1; i <= nstates; ++i) {
    collect_series(report, "price", i, "state " + std::to_string(i) + " sup",
                   i - 1, price_series, false);
    collect_series(report, "price", i, "state " + std::to_string(i) + " L2",
                   (i - 1) + 4, price_series, true);
  }
  if (!price_series.empty()) {
    const std::string path = directory + "/price_convergence.svg";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_plots: cannot write " + path);
    out << svg_plot("Convergence of the price approximation", price_series);
    written.push_back(path);
  }
  if (written.empty())
    throw std::invalid_argument("emit_plots: nothing to plot");
  return written;
}

}  // namespace regime
