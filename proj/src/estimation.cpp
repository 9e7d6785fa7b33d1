#include "regime/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace regime {

// ---------------------------------------------------------------------------
// Grid

long EstimationGrid::cell_of(double y) const {
  if (y <= 0.0) return 0;
  long k = static_cast<long>(std::ceil(y / step)) - 1;
  k = std::clamp(k, 0L, num_cells - 1);
  // Guard the half-open membership y in (v_k, v_{k+1}] against rounding.
  while (k > 0 && y <= knot(k)) --k;
  while (k < num_cells - 1 && y > knot(k + 1)) ++k;
  return k;
}

EstimationGrid build_grid(double tau, double alpha) {
  if (!(tau > 0.0)) throw std::invalid_argument("build_grid: tau must be > 0");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("build_grid: alpha must lie in (0, 1/2)");
  EstimationGrid g;
  g.horizon = tau;
  g.alpha = alpha;
  g.num_cells = static_cast<long>(std::floor(std::pow(tau, 1.0 + alpha)));
  if (g.num_cells < 1) g.num_cells = 1;
  g.step = tau / static_cast<double>(g.num_cells);
  return g;
}

int pair_index(int num_states, int i, int j) {
  return i * (num_states - 1) + (j < i ? j : j - 1);
}

int num_pairs(int num_states) { return num_states * (num_states - 1); }

// ---------------------------------------------------------------------------
// StepRate

StepRate::StepRate(EstimationGrid grid, int num_states,
                   std::vector<std::vector<double>> values)
    : grid_(grid), num_states_(num_states), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != num_pairs(num_states_))
    throw std::invalid_argument("StepRate: one value row per ordered pair");
  for (const auto& row : values_) {
    if (static_cast<long>(row.size()) != grid_.num_cells)
      throw std::invalid_argument("StepRate: value row length != num_cells");
    for (double v : row)
      if (!(v >= 0.0))
        throw std::invalid_argument("StepRate: negative cell value");
  }
  total_.assign(num_states_, std::vector<double>(grid_.num_cells, 0.0));
  total_prefix_.assign(num_states_,
                       std::vector<double>(grid_.num_cells + 1, 0.0));
  for (int i = 0; i < num_states_; ++i) {
    for (int j = 0; j < num_states_; ++j) {
      if (j == i) continue;
      const auto& row = values_[pair_index(num_states_, i, j)];
      for (long k = 0; k < grid_.num_cells; ++k) total_[i][k] += row[k];
    }
    for (long k = 0; k < grid_.num_cells; ++k)
      total_prefix_[i][k + 1] = total_prefix_[i][k] + grid_.step * total_[i][k];
  }
}

double StepRate::rate(int i, int j, double y) const {
  return values_[pair_index(num_states_, i, j)][grid_.cell_of(y)];
}

double StepRate::total_rate(int i, double y) const {
  return total_[i][grid_.cell_of(y)];
}

double StepRate::cumulative_hazard(int i, double y) const {
  if (y <= 0.0) return 0.0;
  if (y >= grid_.horizon) {
    // Constant continuation at the last cell's value.
    return total_prefix_[i][grid_.num_cells] +
           (y - grid_.horizon) * total_[i][grid_.num_cells - 1];
  }
  const long k = grid_.cell_of(y);
  return total_prefix_[i][k] + (y - grid_.knot(k)) * total_[i][k];
}

double StepRate::total_rate_bound(int i, double lo, double hi) const {
  long k_lo = grid_.cell_of(std::nextafter(lo, grid_.horizon));
  long k_hi = std::isfinite(hi) ? grid_.cell_of(hi) : grid_.num_cells - 1;
  if (hi >= grid_.horizon) k_hi = grid_.num_cells - 1;
  double bound = 0.0;
  for (long k = k_lo; k <= k_hi; ++k)
    bound = std::max(bound, total_[i][k]);
  return bound;
}

double StepRate::next_breakpoint(int, double y) const {
  if (y >= grid_.horizon) return std::numeric_limits<double>::infinity();
  long k = static_cast<long>(std::floor(y / grid_.step)) + 1;
  while (k <= grid_.num_cells && grid_.knot(k) <= y) ++k;
  if (k > grid_.num_cells) return std::numeric_limits<double>::infinity();
  return grid_.knot(k);
}

std::vector<double> StepRate::breakpoints(double lo, double hi) const {
  std::vector<double> knots;
  for (long k = 0; k <= grid_.num_cells; ++k) {
    const double v = grid_.knot(k);
    if (v > hi) break;
    if (v >= lo) knots.push_back(v);
  }
  return knots;
}

// ---------------------------------------------------------------------------
// Counting statistics and the MLE

CountStatistics count_statistics(const CensoredHistory& history,
                                 const EstimationGrid& grid, int num_states) {
  if (std::abs(history.horizon - grid.horizon) >
      1e-9 * std::max(1.0, grid.horizon))
    throw std::invalid_argument(
        "count_statistics: history and grid horizons differ");
  for (int s : history.states)
    if (s < 0 || s >= num_states)
      throw std::invalid_argument("count_statistics: state out of range");

  CountStatistics stats;
  stats.counts.assign(num_pairs(num_states),
                      std::vector<long long>(grid.num_cells, 0));
  stats.occupancies.assign(num_states,
                           std::vector<double>(grid.num_cells, 0.0));

  auto add_occupancy = [&](int state, double duration) {
    auto& row = stats.occupancies[state];
    for (long k = 0; k < grid.num_cells; ++k) {
      const double lo = grid.knot(k);
      if (duration <= lo) break;
      row[k] += std::min(duration, grid.knot(k + 1)) - lo;
    }
  };

  const int n = history.num_transitions();
  for (int l = 0; l < n; ++l) {
    const int from = history.states[l];
    const int to = history.states[l + 1];
    const double y = history.holding_times[l];
    stats.counts[pair_index(num_states, from, to)][grid.cell_of(y)] += 1;
    add_occupancy(from, y);
  }
  if (history.backward_recurrence > 0.0)
    add_occupancy(history.states[n], history.backward_recurrence);
  return stats;
}

StepRateEstimate estimate_rate(const CensoredHistory& history,
                               const EstimationGrid& grid, int num_states) {
  auto stats = count_statistics(history, grid, num_states);
  std::vector<std::vector<double>> values(
      num_pairs(num_states), std::vector<double>(grid.num_cells, 0.0));
  for (int i = 0; i < num_states; ++i) {
    for (int j = 0; j < num_states; ++j) {
      if (j == i) continue;
      const int p = pair_index(num_states, i, j);
      for (long k = 0; k < grid.num_cells; ++k) {
        const double v = stats.occupancies[i][k];
        if (v > 0.0)
          values[p][k] = static_cast<double>(stats.counts[p][k]) / v;
      }
    }
  }
  StepRateEstimate est;
  est.rate = std::make_shared<StepRate>(grid, num_states, std::move(values));
  est.counts = std::move(stats.counts);
  est.occupancies = std::move(stats.occupancies);
  return est;
}

StepRateEstimate project_true_rate(const RateFunction& rate,
                                   const EstimationGrid& grid) {
  const int n = rate.num_states();
  std::vector<std::vector<double>> values(
      num_pairs(n), std::vector<double>(grid.num_cells, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      auto& row = values[pair_index(n, i, j)];
      for (long k = 0; k < grid.num_cells; ++k)
        row[k] = rate.rate(i, j, grid.knot(k));
    }
  StepRateEstimate proj;
  proj.rate = std::make_shared<StepRate>(grid, n, std::move(values));
  proj.counts.assign(num_pairs(n),
                     std::vector<long long>(grid.num_cells, 0));
  proj.occupancies.assign(n, std::vector<double>(grid.num_cells, 0.0));
  return proj;
}

// ---------------------------------------------------------------------------
// Error norms

ErrorNorms error_norms(const RateFunction& a, const RateFunction& b,
                       double y_max, int samples) {
  if (a.num_states() != b.num_states())
    throw std::invalid_argument("error_norms: state count mismatch");
  if (!(y_max > 0.0)) throw std::invalid_argument("error_norms: y_max <= 0");
  if (samples < 2) throw std::invalid_argument("error_norms: samples < 2");
  const int n = a.num_states();

  std::set<double> pts;
  for (int s = 0; s < samples; ++s)
    pts.insert(y_max * static_cast<double>(s) / (samples - 1));
  auto add_knots = [&](const RateFunction& f) {
    std::vector<double> knots = f.breakpoints(0.0, y_max);
    knots.push_back(0.0);
    knots.push_back(y_max);
    std::sort(knots.begin(), knots.end());
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      pts.insert(knots[k]);
      const double w = knots[k + 1] - knots[k];
      if (w <= 0.0) continue;
      for (int q = 1; q <= 20; ++q)
        pts.insert(knots[k] + w * q / 21.0);
    }
    pts.insert(knots.back());
  };
  add_knots(a);
  add_knots(b);

  std::vector<double> ys(pts.begin(), pts.end());
  const std::size_t m = ys.size();

  ErrorNorms out;
  std::vector<double> worst(m, 0.0);  // pairwise max |a-b| per sample
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double sup = 0.0;
      std::vector<double> diff(m);
      for (std::size_t s = 0; s < m; ++s) {
        diff[s] = std::abs(a.rate(i, j, ys[s]) - b.rate(i, j, ys[s]));
        sup = std::max(sup, diff[s]);
        worst[s] = std::max(worst[s], diff[s]);
      }
      double l2sq = 0.0;
      for (std::size_t s = 0; s + 1 < m; ++s)
        l2sq += 0.5 * (diff[s] * diff[s] + diff[s + 1] * diff[s + 1]) *
                (ys[s + 1] - ys[s]);
      out.pairs.push_back({i, j, sup, std::sqrt(l2sq)});
      out.sup = std::max(out.sup, sup);
    }
  double l2sq = 0.0;
  for (std::size_t s = 0; s + 1 < m; ++s)
    l2sq += 0.5 * (worst[s] * worst[s] + worst[s + 1] * worst[s + 1]) *
            (ys[s + 1] - ys[s]);
  out.l2 = std::sqrt(l2sq);
  return out;
}

}  // namespace regime
