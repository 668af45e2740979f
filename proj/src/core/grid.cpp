#include "core/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "core/rng.hpp"

namespace chivar {

TimeGrid build_grid(double horizon, int64_t steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("build_grid: horizon must be positive and finite");
  if (steps < 2) throw std::invalid_argument("build_grid: need at least 2 steps");
  return TimeGrid{horizon, steps};
}

int64_t snap_to_step(double t, double dt, double rel_tol) {
  double s = t / dt;
  double r = std::round(s);
  if (std::abs(s - r) <= rel_tol * std::max(1.0, std::abs(s)))
    return static_cast<int64_t>(r);
  return -1;
}

SampledPath::SampledPath(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (static_cast<int64_t>(values.size()) != grid.nodes())
    throw std::invalid_argument("SampledPath: values length must be steps + 1");
  for (double x : values)
    if (!std::isfinite(x)) throw std::invalid_argument("SampledPath: non-finite value");
}

double value_at(const SampledPath& path, double t) {
  if (t <= 0.0) return path.values.front();
  if (t >= path.grid.horizon) return path.values.back();
  double dt = path.grid.dt();
  int64_t snapped = snap_to_step(t, dt);
  if (snapped >= 0) return path.at_step(snapped);
  double s = t / dt;
  auto k = static_cast<int64_t>(std::floor(s));
  if (k >= path.grid.steps) return path.values.back();
  double frac = s - static_cast<double>(k);
  double lo = path.values[static_cast<std::size_t>(k)];
  double hi = path.values[static_cast<std::size_t>(k + 1)];
  return lo + frac * (hi - lo);
}

LagGrid build_lag_grid(double tau, const TimeGrid& grid) {
  if (!(tau > 0.0) || tau > grid.horizon + 1e-12 * grid.horizon)
    throw std::invalid_argument("build_lag_grid: need 0 < tau <= T");
  int64_t lags = snap_to_step(tau, grid.dt());
  if (lags < 1)
    throw std::invalid_argument("build_lag_grid: tau must be an integer multiple of dt");
  return LagGrid{tau, lags, grid.dt()};
}

WindowSlice window_at(const SampledPath& path, double t, const LagGrid& lags) {
  if (t < 0.0 || t > path.grid.horizon)
    throw std::invalid_argument("window_at: t outside [0, T]");
  WindowSlice w;
  w.lag_grid = lags;
  w.values.resize(static_cast<std::size_t>(lags.nodes()));
  int64_t k = snap_to_step(t, path.grid.dt());
  if (k >= 0) {
    // Aligned case: pure node lookups.
    for (int64_t j = 0; j <= lags.lags; ++j)
      w.values[static_cast<std::size_t>(j)] = path.at_step(k - lags.lags + j);
  } else {
    for (int64_t j = 0; j <= lags.lags; ++j)
      w.values[static_cast<std::size_t>(j)] = value_at(path, t + lags.node(j));
  }
  return w;
}

WindowSlice constant_window(const LagGrid& lags, double level) {
  WindowSlice w;
  w.lag_grid = lags;
  w.values.assign(static_cast<std::size_t>(lags.nodes()), level);
  return w;
}

AnchorSet build_anchors(const std::vector<double>& lags, const LagGrid& grid) {
  if (lags.empty()) throw std::invalid_argument("build_anchors: empty anchor list");
  AnchorSet a;
  for (double lag : lags) {
    if (lag > 0.0 || lag < -grid.tau - 1e-12)
      throw std::invalid_argument("build_anchors: anchor outside [-tau, 0]");
    int64_t s = snap_to_step(lag, grid.dt);
    if (s == -1 && lag != 0.0)
      throw std::invalid_argument("build_anchors: anchor not aligned to the lag grid");
    a.lags.push_back(static_cast<double>(s) * grid.dt);
    a.lag_steps.push_back(s);
  }
  for (std::size_t i = 1; i < a.lags.size(); ++i)
    if (!(a.lag_steps[i] > a.lag_steps[i - 1]))
      throw std::invalid_argument("build_anchors: anchors must be strictly increasing");
  if (a.lag_steps.back() != 0)
    throw std::invalid_argument("build_anchors: last anchor must be 0");
  if (a.lag_steps.front() != -grid.lags)
    throw std::invalid_argument("build_anchors: first anchor must be -tau");
  return a;
}

SampledPath wiener_path(const TimeGrid& grid, uint64_t seed, uint64_t path_index) {
  std::vector<double> v(static_cast<std::size_t>(grid.nodes()));
  double sqdt = std::sqrt(grid.dt());
  v[0] = 0.0;
  for (int64_t k = 0; k < grid.steps; ++k)
    v[static_cast<std::size_t>(k + 1)] =
        v[static_cast<std::size_t>(k)] + sqdt * normal_draw(seed, path_index, static_cast<uint64_t>(k));
  return SampledPath(grid, std::move(v));
}

void write_path_csv(const SampledPath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_path_csv: cannot open " + file);
  out << "t,value\n";
  char buf[64];
  for (int64_t k = 0; k <= path.grid.steps; ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.grid.node(k),
                  path.values[static_cast<std::size_t>(k)]);
    out << buf;
  }
}

SampledPath read_path_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("read_path_csv: cannot open " + file);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_path_csv: empty file");
  std::vector<double> ts, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b))
      throw std::runtime_error("read_path_csv: malformed row: " + line);
    ts.push_back(std::stod(a));
    vs.push_back(std::stod(b));
  }
  if (ts.size() < 3) throw std::runtime_error("read_path_csv: need at least 3 rows");
  if (std::abs(ts.front()) > 1e-9)
    throw std::runtime_error("read_path_csv: grid must start at t = 0");
  double dt = ts[1] - ts[0];
  if (!(dt > 0.0)) throw std::runtime_error("read_path_csv: t not increasing");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    double step = ts[i] - ts[i - 1];
    if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
      throw std::runtime_error("read_path_csv: non-uniform spacing at row " + std::to_string(i));
  }
  TimeGrid grid{ts.back(), static_cast<int64_t>(ts.size()) - 1};
  return SampledPath(grid, std::move(vs));
}

}  // namespace chivar
