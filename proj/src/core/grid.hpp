#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chivar {

// Uniform grid on [0, T] with M steps, nodes t_k = k*T/M.
struct TimeGrid {
  double horizon = 0.0;
  int64_t steps = 0;

  double dt() const { return horizon / static_cast<double>(steps); }
  int64_t nodes() const { return steps + 1; }
  double node(int64_t k) const { return static_cast<double>(k) * dt(); }
  bool operator==(const TimeGrid& o) const {
    return horizon == o.horizon && steps == o.steps;
  }
};

TimeGrid build_grid(double horizon, int64_t steps);

// Snaps t to a step index if it lies within relative tolerance of one;
// returns -1 otherwise.
int64_t snap_to_step(double t, double dt, double rel_tol = 1e-9);

// Real process realization on a TimeGrid, extended by constancy outside
// [0, T]: value(t) = value(0) for t <= 0, value(T) for t >= T.
struct SampledPath {
  TimeGrid grid;
  std::vector<double> values;  // size steps + 1

  SampledPath() = default;
  SampledPath(TimeGrid g, std::vector<double> v);

  // Node lookup with the boundary-extension convention on the index.
  double at_step(int64_t k) const {
    if (k <= 0) return values.front();
    if (k >= grid.steps) return values.back();
    return values[static_cast<std::size_t>(k)];
  }
};

// Extension below 0 / above T; linear interpolation between nodes, exact at
// nodes.
double value_at(const SampledPath& path, double t);

// Lag grid on [-tau, 0] sharing the step of the parent time grid; nodes
// y_j = -tau + j*dt, last node exactly 0.
struct LagGrid {
  double tau = 0.0;
  int64_t lags = 0;  // tau / dt
  double dt = 0.0;

  int64_t nodes() const { return lags + 1; }
  double node(int64_t j) const { return -tau + static_cast<double>(j) * dt; }
};

LagGrid build_lag_grid(double tau, const TimeGrid& grid);

// One window X_t(.) sampled on a LagGrid.
struct WindowSlice {
  LagGrid lag_grid;
  std::vector<double> values;  // size lags + 1, values[j] = eta(y_j)

  double at_zero() const { return values.back(); }
  // Value at lag node offset by `steps_back` grid steps from 0.
  double at_lag_steps(int64_t steps_back) const {
    int64_t j = lag_grid.lags - steps_back;
    return values[static_cast<std::size_t>(j < 0 ? 0 : j)];
  }
};

WindowSlice window_at(const SampledPath& path, double t, const LagGrid& lags);

// Constant window eta == level.
WindowSlice constant_window(const LagGrid& lags, double level);

// Anchor lags -tau = a_N < ... < a_1 < a_0 = 0, all grid multiples; stored
// ascending, so front() == -tau and back() == 0.
struct AnchorSet {
  std::vector<double> lags;            // ascending
  std::vector<int64_t> lag_steps;      // lags[i] / dt, non-positive

  std::size_t size() const { return lags.size(); }
};

AnchorSet build_anchors(const std::vector<double>& lags, const LagGrid& grid);

// Brownian sample on a grid, increments addressed by (seed, path_index, step).
SampledPath wiener_path(const TimeGrid& grid, uint64_t seed, uint64_t path_index);

// CSV persistence, header "t,value". Loading enforces strictly increasing,
// uniformly spaced t (relative tolerance 1e-9) starting at 0.
void write_path_csv(const SampledPath& path, const std::string& file);
SampledPath read_path_csv(const std::string& file);

}  // namespace chivar
