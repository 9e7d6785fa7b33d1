#include "regime/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "regime/threading.hpp"

namespace regime {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Thomas elimination. The assembled rows are M-matrix rows, so every pivot
// stays positive; a nonpositive pivot means the time step is inconsistent
// with the rate being solved.
void solve_tridiagonal(const std::vector<double>& lower,
                       const std::vector<double>& diag,
                       const std::vector<double>& upper,
                       std::vector<double>& rhs, std::vector<double>& scratch) {
  const std::size_t n = diag.size();
  double d = diag[0];
  if (d <= 0.0)
    throw std::runtime_error(
        "pricing: tridiagonal system lost diagonal dominance");
  scratch[0] = upper[0] / d;
  rhs[0] /= d;
  for (std::size_t k = 1; k < n; ++k) {
    d = diag[k] - lower[k] * scratch[k - 1];
    if (d <= 0.0)
      throw std::runtime_error(
          "pricing: tridiagonal system lost diagonal dominance");
    scratch[k] = upper[k] / d;
    rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / d;
  }
  for (std::size_t k = n - 1; k-- > 0;) rhs[k] -= scratch[k] * rhs[k + 1];
}

// Spatial operator A = r s d/ds + (1/2) sigma^2 s^2 d2/ds2 - r at the
// interior nodes, encoded as A u|n = lower_n u_{n-1} - center_n u_n
// + upper_n u_{n+1}. Convection is centered where that keeps both
// neighbours' coefficients nonnegative and one-sided otherwise, so the
// implicit matrix stays an M-matrix.
struct SpaceOperator {
  std::vector<double> lower, center, upper;

  void build(int num_space_steps, double ds, double r, double sigma) {
    const int ns = num_space_steps;
    lower.assign(ns + 1, 0.0);
    center.assign(ns + 1, 0.0);
    upper.assign(ns + 1, 0.0);
    for (int n = 1; n < ns; ++n) {
      const double s = ds * n;
      const double diff = 0.5 * sigma * sigma * s * s / (ds * ds);
      const double conv = r * s / (2.0 * ds);
      if (diff >= conv) {
        lower[n] = diff - conv;
        center[n] = 2.0 * diff + r;
        upper[n] = diff + conv;
      } else {
        lower[n] = diff;
        center[n] = 2.0 * diff + 2.0 * conv + r;
        upper[n] = diff + 2.0 * conv;
      }
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Grid

PriceGrid PriceGrid::build(const MarketParams& params,
                           const SolverConfig& config) {
  params.validate();
  PriceGrid g;
  g.maturity = params.maturity;
  if (!(config.delta_t > 0.0))
    throw std::invalid_argument("solver: delta_t must be positive");
  g.num_time_steps = std::max(
      1, static_cast<int>(std::lround(params.maturity / config.delta_t)));
  g.dt = params.maturity / g.num_time_steps;
  if (!(params.strike > 0.0))
    throw std::invalid_argument("solver: the grid needs a positive strike");
  g.s_max = config.s_max > 0.0 ? config.s_max : 8.0 * params.strike;
  if (g.s_max < 3.0 * params.strike)
    throw std::invalid_argument(
        "solver: s_max below 3 strikes truncates the call payoff");
  const double ds = config.delta_s > 0.0 ? config.delta_s : g.s_max / 640.0;
  g.num_space_steps = std::max(4, static_cast<int>(std::lround(g.s_max / ds)));
  g.ds = g.s_max / g.num_space_steps;
  g.num_states = params.num_states();
  if (!(config.theta_scheme >= 0.5 && config.theta_scheme <= 1.0))
    throw std::invalid_argument("solver: theta_scheme must lie in [0.5, 1]");
  g.theta_scheme = config.theta_scheme;
  g.rannacher_steps = std::max(0, config.rannacher_steps);
  g.keep_full_lattice = config.keep_full_lattice;
  return g;
}

// ---------------------------------------------------------------------------
// Surface accessors

double PriceSurface::value(int m, int n, int i, int q) const {
  const int nt = grid_.num_time_steps;
  const int ns = grid_.num_space_steps;
  if (m < 0 || m > nt || n < 0 || n > ns || i < 0 || i >= grid_.num_states ||
      q < 0 || q > m)
    throw std::out_of_range("PriceSurface::value: index outside the lattice");
  if (collapsed_ || q == 0)
    return y0_[i][static_cast<std::size_t>(m) * (ns + 1) + n];
  if (m == nt) return std::max(grid_.spot(n) - strike_, 0.0);
  if (!full_)
    throw std::runtime_error(
        "PriceSurface::value: full lattice was not retained for this solve");
  const std::size_t at =
      ((static_cast<std::size_t>(i) * (m + 1)) + q) * (ns + 1) + n;
  return full_values_[m][at];
}

// ---------------------------------------------------------------------------
// PDE solve

PriceSurface solve_pde(const MarketParams& params, const RateFunction& rate,
                       const PriceGrid& grid) {
  params.validate();
  if (rate.num_states() != params.num_states())
    throw std::invalid_argument("solve_pde: rate/market state count mismatch");
  const int nt = grid.num_time_steps;
  const int ns = grid.num_space_steps;
  const int nstates = grid.num_states;
  const double dt = grid.dt;
  const double strike = params.strike;

  // Rates sampled at the midpoint age of every characteristic segment, and
  // the setup stability check dt * sup lambda < 1.
  std::vector<std::vector<double>> lam(nstates);        // [i][j * nt + q]
  std::vector<std::vector<double>> lam_total(nstates);  // [i][q]
  double sup_lambda = 0.0;
  for (int i = 0; i < nstates; ++i) {
    lam_total[i].assign(nt, 0.0);
    lam[i].assign(static_cast<std::size_t>(nstates) * nt, 0.0);
    for (int q = 0; q < nt; ++q) {
      const double y = (q + 0.5) * dt;
      double total = 0.0;
      for (int j = 0; j < nstates; ++j) {
        if (j == i) continue;
        const double l = rate.rate(i, j, y);
        lam[i][static_cast<std::size_t>(j) * nt + q] = l;
        total += l;
      }
      lam_total[i][q] = total;
      sup_lambda = std::max(sup_lambda, total);
    }
  }
  if (dt * sup_lambda >= 1.0)
    throw std::runtime_error(
        "solve_pde: dt too large for the supplied rate (dt * sup lambda >= 1)");

  PriceSurface surf;
  surf.grid_ = grid;
  surf.rate_kind_ = rate.kind();
  surf.strike_ = strike;
  surf.collapsed_ = (nstates == 1);
  surf.full_ = grid.keep_full_lattice && !surf.collapsed_;
  surf.y0_.assign(nstates, std::vector<double>(
                               static_cast<std::size_t>(nt + 1) * (ns + 1)));

  std::vector<double> payoff(ns + 1);
  for (int n = 0; n <= ns; ++n)
    payoff[n] = std::max(grid.spot(n) - strike, 0.0);

  std::vector<SpaceOperator> ops(nstates);
  for (int i = 0; i < nstates; ++i)
    ops[i].build(ns, grid.ds, params.rates[i], params.volatilities[i]);

  // Far-field row: the call is asymptotically s - K * (expected discount);
  // the per-state discount exp(-r(i) (T - t)) pins it. Exact for a single
  // regime, and any regime-mixing mismatch is confined to the far field.
  auto boundary_value = [&](int i, int m) {
    return grid.s_max - strike * std::exp(-params.rates[i] *
                                          (grid.maturity - grid.time(m)));
  };

  // Work area: one s-line per age index per state; the single-regime march
  // has no age dependence and collapses to one line.
  const int max_age = surf.collapsed_ ? 0 : nt;
  std::vector<std::vector<std::vector<double>>> level(
      nstates, std::vector<std::vector<double>>(max_age + 1,
                                                std::vector<double>(ns + 1)));
  for (int i = 0; i < nstates; ++i) {
    for (int q = 0; q <= max_age; ++q) level[i][q] = payoff;
    std::copy(payoff.begin(), payoff.end(),
              surf.y0_[i].begin() + static_cast<std::size_t>(nt) * (ns + 1));
  }
  if (surf.full_) surf.full_values_.resize(nt);

  std::vector<double> lower(ns + 1), diag(ns + 1), upper(ns + 1), rhs(ns + 1),
      scratch(ns + 1), coupling(ns + 1);
  std::vector<std::vector<double>> newer_y0(nstates);

  for (int m = nt - 1; m >= 0; --m) {
    const double theta =
        (nt - 1 - m) < grid.rannacher_steps ? 1.0 : grid.theta_scheme;
    for (int i = 0; i < nstates; ++i) newer_y0[i] = level[i][0];

    for (int i = 0; i < nstates; ++i) {
      const SpaceOperator& op = ops[i];
      const int q_top = surf.collapsed_ ? 0 : m;
      for (int q = 0; q <= q_top; ++q) {
        const std::vector<double>& older =
            surf.collapsed_ ? level[i][0] : level[i][q + 1];
        const double lam_i = surf.collapsed_ ? 0.0 : lam_total[i][q];

        std::fill(coupling.begin(), coupling.end(), 0.0);
        if (!surf.collapsed_) {
          for (int j = 0; j < nstates; ++j) {
            if (j == i) continue;
            const double l = lam[i][static_cast<std::size_t>(j) * nt + q];
            if (l == 0.0) continue;
            const auto& gj = newer_y0[j];
            for (int n = 1; n < ns; ++n) coupling[n] += l * gj[n];
          }
        }

        lower[0] = 0.0;
        diag[0] = 1.0;
        upper[0] = 0.0;
        rhs[0] = 0.0;  // phi(t, 0, i, y) = 0
        for (int n = 1; n < ns; ++n) {
          lower[n] = -theta * op.lower[n];
          diag[n] = 1.0 / dt + lam_i + theta * op.center[n];
          upper[n] = -theta * op.upper[n];
          double ex = older[n] / dt + coupling[n];
          if (theta < 1.0) {
            const double w = 1.0 - theta;
            ex += w * (op.lower[n] * older[n - 1] - op.center[n] * older[n] +
                       op.upper[n] * older[n + 1]);
          }
          rhs[n] = ex;
        }
        lower[ns] = 0.0;
        diag[ns] = 1.0;
        upper[ns] = 0.0;
        rhs[ns] = boundary_value(i, m);
        solve_tridiagonal(lower, diag, upper, rhs, scratch);
        level[i][q] = rhs;
      }
      std::copy(level[i][0].begin(), level[i][0].end(),
                surf.y0_[i].begin() + static_cast<std::size_t>(m) * (ns + 1));
    }
    if (surf.full_) {
      auto& block = surf.full_values_[m];
      block.resize(static_cast<std::size_t>(nstates) * (m + 1) * (ns + 1));
      for (int i = 0; i < nstates; ++i)
        for (int q = 0; q <= m; ++q)
          std::copy(
              level[i][q].begin(), level[i][q].end(),
              block.begin() +
                  ((static_cast<std::size_t>(i) * (m + 1)) + q) * (ns + 1));
    }
  }
  return surf;
}

// ---------------------------------------------------------------------------
// Interpolation

namespace {

// Value on the characteristic labelled c (t - y = c * dt) at fractional time
// index mt, linear along the characteristic and in s.
double along_characteristic(const PriceSurface& surf, int i, int c, double mt,
                            double sw, int n0) {
  const auto& grid = surf.grid();
  const int nt = grid.num_time_steps;
  auto lattice = [&](int m) {
    const int q = m - c;
    const double a = surf.value(m, n0, i, q);
    const double b =
        n0 + 1 <= grid.num_space_steps ? surf.value(m, n0 + 1, i, q) : a;
    return a + sw * (b - a);
  };
  const double clamped =
      std::clamp(mt, static_cast<double>(c), static_cast<double>(nt));
  int m0 = static_cast<int>(std::floor(clamped));
  m0 = std::clamp(m0, c, nt - 1);
  if (m0 < c) m0 = c;  // c == nt: the single terminal point
  const int m1 = std::min(m0 + 1, nt);
  const double w = std::clamp(clamped - m0, 0.0, 1.0);
  if (m1 == m0) return lattice(m0);
  return (1.0 - w) * lattice(m0) + w * lattice(m1);
}

}  // namespace

double price_at(const PriceSurface& surface, double t, double s, int i,
                double y) {
  const auto& grid = surface.grid();
  const double eps = 1e-9 * std::max(1.0, grid.maturity);
  if (i < 0 || i >= grid.num_states)
    throw std::out_of_range("price_at: state out of range");
  if (t < -eps || t > grid.maturity + eps || s < 0.0 ||
      s > grid.s_max + 1e-9 * std::max(1.0, grid.s_max) || y < -eps ||
      y > t + eps)
    throw std::out_of_range("price_at: query outside the grid hull");
  t = std::clamp(t, 0.0, grid.maturity);
  y = std::clamp(y, 0.0, t);
  s = std::clamp(s, 0.0, grid.s_max);

  const double sf = s / grid.ds;
  int n0 = static_cast<int>(std::floor(sf));
  if (n0 >= grid.num_space_steps) n0 = grid.num_space_steps - 1;
  const double sw = sf - n0;

  auto y0_interp = [&] {
    const double mt = t / grid.dt;
    int m0 = static_cast<int>(std::floor(mt));
    if (m0 >= grid.num_time_steps) m0 = grid.num_time_steps - 1;
    const double w = mt - m0;
    auto at = [&](int m) {
      const double a = surface.value(m, n0, i, 0);
      const double b = n0 + 1 <= grid.num_space_steps
                           ? surface.value(m, n0 + 1, i, 0)
                           : a;
      return a + sw * (b - a);
    };
    return (1.0 - w) * at(m0) + w * at(m0 + 1);
  };

  if (surface.age_collapsed()) return y0_interp();

  if (!surface.has_full_lattice()) {
    // Only the y = 0 plane and the terminal slice were kept.
    if (y <= eps) return y0_interp();
    if (t >= grid.maturity - eps) {
      const int nt = grid.num_time_steps;
      const double a = surface.value(nt, n0, i, 0);
      const double b = n0 + 1 <= grid.num_space_steps
                           ? surface.value(nt, n0 + 1, i, 0)
                           : a;
      return a + sw * (b - a);
    }
    throw std::runtime_error(
        "price_at: positive-age query needs the full lattice (enable "
        "keep_full_lattice)");
  }

  const double mt = t / grid.dt;
  const double cf = (t - y) / grid.dt;  // characteristic label
  int c0 = static_cast<int>(std::floor(cf + 1e-9));
  c0 = std::clamp(c0, 0, grid.num_time_steps);
  const int c1 = std::min(c0 + 1, grid.num_time_steps);
  const double cw = std::clamp(cf - c0, 0.0, 1.0);

  const double va = along_characteristic(surface, i, c0, mt, sw, n0);
  if (c1 == c0 || cw == 0.0) return va;
  const double vb = along_characteristic(surface, i, c1, mt, sw, n0);
  return (1.0 - cw) * va + cw * vb;
}

// ---------------------------------------------------------------------------
// Monte Carlo

McPrice monte_carlo_price(const MarketParams& params, const RateFunction& rate,
                          double t, double s, int i, double y, long paths,
                          std::uint64_t seed, int threads) {
  params.validate();
  if (rate.num_states() != params.num_states())
    throw std::invalid_argument("monte_carlo_price: state count mismatch");
  if (paths < 100)
    throw std::invalid_argument("monte_carlo_price: need at least 100 paths");
  if (i < 0 || i >= params.num_states())
    throw std::out_of_range("monte_carlo_price: state out of range");
  if (!(y >= 0.0) || !(s > 0.0) || t > params.maturity)
    throw std::invalid_argument("monte_carlo_price: bad (t, s, y) arguments");

  const double horizon = params.maturity;
  const long chunk = 4096;
  const long num_chunks = (paths + chunk - 1) / chunk;
  std::vector<double> sum(num_chunks, 0.0), sumsq(num_chunks, 0.0);

  parallel_chunks(paths, chunk, threads, [&](long c, long begin, long end) {
    double s1 = 0.0, s2 = 0.0;
    for (long p = begin; p < end; ++p) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));
      double clock = t, age = y, log_spot = std::log(s), rate_integral = 0.0;
      int state = i;
      for (;;) {
        const double sojourn = sample_sojourn(rate, state, age, rng);
        const double jump_time = clock + sojourn;
        const double segment_end = std::min(jump_time, horizon);
        const double dur = segment_end - clock;
        if (dur > 0.0) {
          const double r = params.rates[state];
          const double sig = params.volatilities[state];
          log_spot += (r - 0.5 * sig * sig) * dur +
                      sig * std::sqrt(dur) * rng.normal();
          rate_integral += r * dur;
          clock = segment_end;
        }
        if (jump_time >= horizon) break;
        state = sample_destination(rate, state, age + sojourn, rng);
        age = 0.0;
      }
      const double payoff = std::max(std::exp(log_spot) - params.strike, 0.0) *
                            std::exp(-rate_integral);
      s1 += payoff;
      s2 += payoff * payoff;
    }
    sum[c] = s1;
    sumsq[c] = s2;
  });

  double s1 = 0.0, s2 = 0.0;
  for (long c = 0; c < num_chunks; ++c) {
    s1 += sum[c];
    s2 += sumsq[c];
  }
  McPrice out;
  out.price = s1 / paths;
  const double var =
      std::max(0.0, (s2 - paths * out.price * out.price) / (paths - 1));
  out.std_error = std::sqrt(var / paths);
  return out;
}

// ---------------------------------------------------------------------------
// Black-Scholes

double black_scholes_call(double s, double strike, double r, double sigma,
                          double time_to_maturity) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("black_scholes_call: sigma must be positive");
  if (time_to_maturity < 0.0)
    throw std::invalid_argument(
        "black_scholes_call: negative time to maturity");
  if (s <= 0.0) return 0.0;
  if (time_to_maturity == 0.0) return std::max(s - strike, 0.0);
  const double vol = sigma * std::sqrt(time_to_maturity);
  const double d1 =
      (std::log(s / strike) + (r + 0.5 * sigma * sigma) * time_to_maturity) /
      vol;
  const double d2 = d1 - vol;
  return s * normal_cdf(d1) -
         strike * std::exp(-r * time_to_maturity) * normal_cdf(d2);
}

}  // namespace regime
