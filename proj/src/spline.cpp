#include "regime/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace regime {

namespace {

// Gauss-Legendre 5-point rule on [0, 1].
constexpr double kGaussNode[5] = {0.5 - 0.45308992296933198,
                                  0.5 - 0.26923465505284155, 0.5,
                                  0.5 + 0.26923465505284155,
                                  0.5 + 0.45308992296933198};
constexpr double kGaussWeight[5] = {0.5 * 0.23692688505618909,
                                    0.5 * 0.47862867049936647,
                                    0.5 * 0.56888888888888889,
                                    0.5 * 0.47862867049936647,
                                    0.5 * 0.23692688505618909};

// The three quadratic pieces in the local coordinate u = y/delta - n of the
// cell [v_n, v_n+1): contributions of B_{n-2}, B_{n-1} and B_n.
inline double piece_left(double u) { return 0.5 * (1.0 - u) * (1.0 - u); }
inline double piece_mid(double u) { return 0.5 * (-2.0 * u * u + 2.0 * u + 1.0); }
inline double piece_right(double u) { return 0.5 * u * u; }

// Antiderivatives of the pieces over [0, u].
inline double ipiece_left(double u) {
  const double w = 1.0 - u;
  return (1.0 - w * w * w) / 6.0;
}
inline double ipiece_mid(double u) {
  return 0.5 * (-2.0 * u * u * u / 3.0 + u * u + u);
}
inline double ipiece_right(double u) { return u * u * u / 6.0; }

}  // namespace

double bspline_basis(long k, double y, double delta) {
  const double u = y / delta - static_cast<double>(k);
  if (u < 0.0 || u >= 3.0) return 0.0;
  if (u < 1.0) return piece_right(u);        // (y - v_k)^2 / (2 delta^2)
  if (u < 2.0) return piece_mid(u - 1.0);    // middle hat piece
  return piece_left(u - 2.0);                // (v_k+3 - y)^2 / (2 delta^2)
}

// ---------------------------------------------------------------------------
// SmoothedRate

SmoothedRate::SmoothedRate(const StepRateEstimate& estimate,
                           double pricing_horizon)
    : grid_(estimate.grid()),
      num_states_(estimate.num_states()),
      pricing_horizon_(pricing_horizon) {
  if (!(pricing_horizon > 0.0))
    throw std::invalid_argument("smooth: pricing horizon must be positive");
  if (grid_.horizon < pricing_horizon)
    throw std::invalid_argument(
        "smooth: tau must reach the pricing horizon (tau >= T)");

  pairs_.resize(num_pairs(num_states_));
  long max_argmax = 0;
  const long k_start = grid_.cell_of(pricing_horizon);
  for (int i = 0; i < num_states_; ++i)
    for (int j = 0; j < num_states_; ++j) {
      if (j == i) continue;
      auto& p = pairs_[pair_index(num_states_, i, j)];
      p.cells = estimate.rate->pair_values(i, j);
      p.argmax_cell = k_start;
      for (long k = k_start; k < grid_.num_cells; ++k)
        if (p.cells[k] > p.cells[p.argmax_cell]) p.argmax_cell = k;
      max_argmax = std::max(max_argmax, p.argmax_cell);
    }

  // Knot coefficients of the total rate per state, tabulated until every
  // pair has entered its constant extension.
  table_end_ = max_argmax + 1;
  tail_.assign(num_states_, 0.0);
  state_coeff_.assign(num_states_,
                      std::vector<double>(table_end_ + 1, 0.0));
  for (int i = 0; i < num_states_; ++i) {
    for (int j = 0; j < num_states_; ++j) {
      if (j == i) continue;
      const int p = pair_index(num_states_, i, j);
      tail_[i] += pairs_[p].cells[pairs_[p].argmax_cell];
      for (long n = 0; n <= table_end_; ++n)
        state_coeff_[i][n] += knot_value(p, n);
    }
  }

  // Exact integrals of the total-rate spline up to each knot. Cell n mixes
  // the knot samples at v_n, v_{n+1}, v_{n+2} with weights 1/6, 2/3, 1/6;
  // from knot table_end_ on, every sample equals the constant tail.
  cum_.assign(num_states_, std::vector<double>(table_end_ + 1, 0.0));
  for (int i = 0; i < num_states_; ++i) {
    auto coeff = [&](long n) {
      return state_coeff_[i][std::clamp(n, 0L, table_end_)];
    };
    for (long n = 0; n < table_end_; ++n)
      cum_[i][n + 1] =
          cum_[i][n] + grid_.step *
                           (coeff(n) + 4.0 * coeff(n + 1) + coeff(n + 2)) / 6.0;
  }
}

double SmoothedRate::knot_value(int pair, long n) const {
  const auto& p = pairs_[pair];
  return p.cells[std::clamp(n - 1, 0L, p.argmax_cell)];
}

double SmoothedRate::coefficient(int i, int j, long k) const {
  return knot_value(pair_index(num_states_, i, j), k + 2);
}

double SmoothedRate::extension_cutoff(int i, int j) const {
  const auto& p = pairs_[pair_index(num_states_, i, j)];
  return std::max(pricing_horizon_, grid_.knot(p.argmax_cell));
}

double SmoothedRate::rate(int i, int j, double y) const {
  if (y < 0.0) y = 0.0;
  const double t = y / grid_.step;
  const long n = static_cast<long>(std::floor(t));
  const double u = t - static_cast<double>(n);
  const int p = pair_index(num_states_, i, j);
  return knot_value(p, n) * piece_left(u) +
         knot_value(p, n + 1) * piece_mid(u) +
         knot_value(p, n + 2) * piece_right(u);
}

double SmoothedRate::total_rate(int i, double y) const {
  if (y < 0.0) y = 0.0;
  const double t = y / grid_.step;
  const long n = static_cast<long>(std::floor(t));
  const double u = t - static_cast<double>(n);
  auto coeff = [&](long m) {
    return state_coeff_[i][std::clamp(m, 0L, table_end_)];
  };
  return coeff(n) * piece_left(u) + coeff(n + 1) * piece_mid(u) +
         coeff(n + 2) * piece_right(u);
}

double SmoothedRate::cumulative_hazard(int i, double y) const {
  if (y <= 0.0) return 0.0;
  const double tail_knot = grid_.knot(table_end_);
  if (y >= tail_knot)
    return cum_[i][table_end_] + (y - tail_knot) * tail_[i];
  const double t = y / grid_.step;
  const long n = static_cast<long>(std::floor(t));
  const double u = t - static_cast<double>(n);
  auto coeff = [&](long m) {
    return state_coeff_[i][std::clamp(m, 0L, table_end_)];
  };
  return cum_[i][n] + grid_.step * (coeff(n) * ipiece_left(u) +
                                    coeff(n + 1) * ipiece_mid(u) +
                                    coeff(n + 2) * ipiece_right(u));
}

double SmoothedRate::total_rate_bound(int i, double lo, double hi) const {
  // On any cell the spline is a convex combination of three knot
  // coefficients, so the max coefficient over the touched window bounds it.
  if (lo < 0.0) lo = 0.0;
  const long n_lo = std::clamp(static_cast<long>(std::floor(lo / grid_.step)),
                               0L, table_end_);
  long n_hi = table_end_;
  if (std::isfinite(hi))
    n_hi = std::clamp(static_cast<long>(std::floor(hi / grid_.step)) + 2, 0L,
                      table_end_);
  double bound = 0.0;
  for (long n = n_lo; n <= n_hi; ++n)
    bound = std::max(bound, state_coeff_[i][n]);
  return bound;
}

double SmoothedRate::next_breakpoint(int, double y) const {
  const double tail_knot = grid_.knot(table_end_);
  if (y >= tail_knot) return std::numeric_limits<double>::infinity();
  long n = static_cast<long>(std::floor(y / grid_.step)) + 1;
  while (grid_.knot(n) <= y) ++n;
  return std::min(grid_.knot(n), tail_knot);
}

std::vector<double> SmoothedRate::breakpoints(double lo, double hi) const {
  std::vector<double> knots;
  const long n_end = table_end_;
  for (long n = 0; n <= n_end; ++n) {
    const double v = grid_.knot(n);
    if (v > hi) break;
    if (v >= lo) knots.push_back(v);
  }
  return knots;
}

std::shared_ptr<const SmoothedRate> smooth(const StepRateEstimate& estimate,
                                           double pricing_horizon) {
  return std::make_shared<SmoothedRate>(estimate, pricing_horizon);
}

// ---------------------------------------------------------------------------
// Distance to the step estimate (Lemma-2 style bound)

SplineStepDistance sup_distance_to_step(const SmoothedRate& smoothed,
                                        const StepRateEstimate& estimate,
                                        double y_max) {
  const EstimationGrid& grid = estimate.grid();
  if (std::abs(grid.step - smoothed.grid().step) > 1e-12 ||
      grid.num_cells != smoothed.grid().num_cells)
    throw std::invalid_argument("sup_distance_to_step: grids differ");
  if (!(y_max > 0.0 && y_max <= smoothed.pricing_horizon() + 1e-12))
    throw std::invalid_argument(
        "sup_distance_to_step: interval must sit inside the pricing horizon");
  const int ns = smoothed.num_states();

  SplineStepDistance out;
  const long n_top = grid.cell_of(y_max);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < ns; ++j) {
      if (j == i) continue;
      // Dense sampling: knots plus 32 interior points per cell.
      for (long k = 0; k <= n_top; ++k) {
        const double lo = grid.knot(k);
        const double hi = std::min(grid.knot(k + 1), y_max);
        for (int q = 0; q <= 32; ++q) {
          const double y = lo + (hi - lo) * q / 32.0;
          const double d =
              std::abs(estimate.rate->rate(i, j, y) - smoothed.rate(i, j, y));
          out.distance = std::max(out.distance, d);
        }
      }
      // Modulus at lag delta from the extended knot samples feeding [0, y_max].
      for (long n = 0; n <= n_top + 1; ++n) {
        const double w = std::abs(smoothed.coefficient(i, j, n - 1) -
                                  smoothed.coefficient(i, j, n));
        out.bound = std::max(out.bound, 2.0 * w);
      }
    }
  if (out.distance > out.bound + 1e-12)
    throw std::logic_error(
        "sup_distance_to_step: spline strayed past twice the step modulus");
  return out;
}

// ---------------------------------------------------------------------------
// Existence diagnostics

TbaDiagnostics validate_tba_conditions(const SmoothedRate& smoothed) {
  const int ns = smoothed.num_states();
  const EstimationGrid& grid = smoothed.grid();
  TbaDiagnostics diag;

  // (i) C1 at the knots: one-sided difference quotients must agree.
  diag.c1 = true;
  const double h = 1e-6 * grid.step;
  for (int i = 0; i < ns && diag.c1; ++i)
    for (int j = 0; j < ns && diag.c1; ++j) {
      if (j == i) continue;
      double cmax = 0.0;
      const long k_end = smoothed.constant_from_knot();
      for (long n = 0; n <= k_end + 1; ++n)
        cmax = std::max(cmax, smoothed.coefficient(i, j, n - 2));
      if (cmax == 0.0) continue;
      const double tol = 1e-4 * cmax;
      for (long n = 1; n <= k_end; ++n) {
        const double v = grid.knot(n);
        const double fw =
            (smoothed.rate(i, j, v + h) - smoothed.rate(i, j, v)) / h;
        const double bw =
            (smoothed.rate(i, j, v) - smoothed.rate(i, j, v - h)) / h;
        if (std::abs(fw - bw) > tol) {
          diag.c1 = false;
          break;
        }
      }
    }

  // (ii) Lambda_i unbounded iff the constant tail rate is positive.
  diag.positive_tail.resize(ns);
  for (int i = 0; i < ns; ++i)
    diag.positive_tail[i] = smoothed.tail_total_rate(i) > 0.0;

  // (iii) Embedded chain from the smoothed kernel:
  // p_hat_ij = integral of lambda_ij(y) exp(-Lambda_i(y)) dy. Integrated
  // cell by cell with Gauss points, cells split so the hazard increment per
  // piece stays small, plus the closed-form constant tail.
  diag.p_hat.assign(ns, std::vector<double>(ns, 0.0));
  diag.row_sums.assign(ns, 0.0);
  const long tail_knot = smoothed.constant_from_knot();
  for (int i = 0; i < ns; ++i) {
    if (ns == 1) break;
    double survival_log = 0.0;  // -Lambda_i at the current knot
    long cell = 0;
    for (; cell < tail_knot; ++cell) {
      const double a = grid.knot(cell);
      const double b = grid.knot(cell + 1);
      const double inc = smoothed.cumulative_hazard(i, b) -
                         smoothed.cumulative_hazard(i, a);
      const int pieces = std::clamp(static_cast<int>(inc / 0.5) + 1, 1, 256);
      for (int p = 0; p < pieces; ++p) {
        const double lo = a + (b - a) * p / pieces;
        const double wid = (b - a) / pieces;
        for (int g = 0; g < 5; ++g) {
          const double y = lo + wid * kGaussNode[g];
          const double w =
              wid * kGaussWeight[g] *
              std::exp(-smoothed.cumulative_hazard(i, y));
          for (int j = 0; j < ns; ++j)
            if (j != i) diag.p_hat[i][j] += w * smoothed.rate(i, j, y);
        }
      }
      survival_log = -smoothed.cumulative_hazard(i, b);
      if (survival_log < -45.0) break;  // remaining mass < 1e-19
    }
    if (survival_log >= -45.0 && smoothed.tail_total_rate(i) > 0.0) {
      // Constant rates beyond the last knot: the remaining mass splits
      // proportionally in closed form.
      const double mass = std::exp(survival_log);
      for (int j = 0; j < ns; ++j)
        if (j != i)
          diag.p_hat[i][j] +=
              mass * smoothed.tail_value(i, j) / smoothed.tail_total_rate(i);
    }
    for (int j = 0; j < ns; ++j) diag.row_sums[i] += diag.p_hat[i][j];
  }
  if (ns == 1) {
    diag.irreducible = true;
    diag.p_hat.assign(1, std::vector<double>(1, 0.0));
    diag.row_sums.assign(1, 0.0);
  } else {
    auto thresholded = diag.p_hat;
    for (auto& row : thresholded)
      for (double& x : row)
        if (x < 1e-12) x = 0.0;
    diag.irreducible = is_irreducible(thresholded);
  }
  return diag;
}

}  // namespace regime
