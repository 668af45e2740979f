#include "core/chi_window.hpp"

#include <cmath>
#include <stdexcept>

namespace chivar {

SampledPath lagged_path(const SampledPath& x, int64_t lag_steps) {
  if (lag_steps > 0) throw std::invalid_argument("lagged_path: lag must be non-positive");
  std::vector<double> v(static_cast<std::size_t>(x.grid.nodes()));
  for (int64_t k = 0; k <= x.grid.steps; ++k)
    v[static_cast<std::size_t>(k)] = x.at_step(k + lag_steps);
  return SampledPath(x.grid, std::move(v));
}

CovariationCurve lagged_bracket(const SampledPath& x, const SampledPath& y, int64_t ai_steps,
                                int64_t aj_steps, double eps) {
  return epsilon_covariation(lagged_path(x, ai_steps), lagged_path(y, aj_steps), eps);
}

BracketMap estimate_lag_brackets(const SampledPath& x, const SampledPath& y,
                                 const Chi2Measure& mu2, double eps) {
  BracketMap out;
  for (std::size_t i = 0; i < mu2.anchors.size(); ++i)
    for (std::size_t j = 0; j < mu2.anchors.size(); ++j)
      if (mu2.atom_matrix[i][j] != 0.0)
        out.emplace(std::make_pair(i, j),
                    lagged_bracket(x, y, mu2.anchors.lag_steps[i], mu2.anchors.lag_steps[j], eps));
  return out;
}

CovariationCurve chi_cov_direct(const SampledPath& x, const SampledPath& y,
                                const Chi2Measure& mu2, double eps) {
  if (!(x.grid == y.grid)) throw std::invalid_argument("chi_cov_direct: grid mismatch");
  if (std::abs(mu2.lag_grid.dt - x.grid.dt()) > 1e-12 * std::max(1.0, x.grid.dt()))
    throw std::invalid_argument("chi_cov_direct: lag grid not aligned with the time grid");
  int64_t k = epsilon_steps(x, y, eps);
  double eff_eps = static_cast<double>(k) * x.grid.dt();

  const int64_t L = mu2.lag_grid.lags;
  const std::size_t n = mu2.anchors.size();
  const bool atoms = mu2.has_atoms();
  bool mixed = false;
  for (std::size_t i = 0; i < n; ++i)
    mixed = mixed || mu2.has_left_mixed(i) || mu2.has_right_mixed(i);
  const bool kernel = mu2.has_kernel();
  const bool need_windows = mixed || kernel;

  CovariationCurve curve;
  curve.grid = x.grid;
  curve.epsilon = eff_eps;
  curve.values.resize(static_cast<std::size_t>(x.grid.nodes()));
  curve.values[0] = 0.0;

  std::vector<double> dxw, dyw, inner;
  if (need_windows) {
    dxw.resize(static_cast<std::size_t>(L + 1));
    dyw.resize(static_cast<std::size_t>(L + 1));
    inner.resize(static_cast<std::size_t>(L + 1));
  }
  const double dt = x.grid.dt();
  double acc = 0.0;
  for (int64_t s = 0; s < x.grid.steps; ++s) {
    double pairing = 0.0;
    if (atoms) {
      for (std::size_t i = 0; i < n; ++i) {
        int64_t li = mu2.anchors.lag_steps[i];
        double dxi = x.at_step(s + k + li) - x.at_step(s + li);
        for (std::size_t j = 0; j < n; ++j) {
          double lam = mu2.atom_matrix[i][j];
          if (lam == 0.0) continue;
          int64_t lj = mu2.anchors.lag_steps[j];
          pairing += lam * dxi * (y.at_step(s + k + lj) - y.at_step(s + lj));
        }
      }
    }
    if (need_windows) {
      for (int64_t j = 0; j <= L; ++j) {
        int64_t off = j - L;
        dxw[static_cast<std::size_t>(j)] = x.at_step(s + k + off) - x.at_step(s + off);
        dyw[static_cast<std::size_t>(j)] = y.at_step(s + k + off) - y.at_step(s + off);
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (mu2.has_left_mixed(i)) {
          for (std::size_t j = 0; j < inner.size(); ++j)
            inner[j] = mu2.left_mixed[i][j] * dxw[j];
          int64_t li = mu2.anchors.lag_steps[i];
          double dyi = y.at_step(s + k + li) - y.at_step(s + li);
          pairing += trapezoid(inner, dt) * dyi;
        }
        if (mu2.has_right_mixed(i)) {
          for (std::size_t j = 0; j < inner.size(); ++j)
            inner[j] = mu2.right_mixed[i][j] * dyw[j];
          int64_t li = mu2.anchors.lag_steps[i];
          double dxi = x.at_step(s + k + li) - x.at_step(s + li);
          pairing += dxi * trapezoid(inner, dt);
        }
      }
      if (kernel) {
        std::vector<double> outer(inner.size());
        for (std::size_t jx = 0; jx < outer.size(); ++jx) {
          const auto& row = mu2.kernel[jx];
          for (std::size_t jy = 0; jy < inner.size(); ++jy) inner[jy] = row[jy] * dyw[jy];
          outer[jx] = trapezoid(inner, dt) * dxw[jx];
        }
        pairing += trapezoid(outer, dt);
      }
    }
    acc += pairing * dt / eff_eps;
    curve.values[static_cast<std::size_t>(s + 1)] = acc;
  }
  return curve;
}

CovariationCurve chi_cov_closed(const BracketMap& brackets, const Chi2Measure& mu2,
                                const TimeGrid* grid) {
  CovariationCurve curve;
  bool have_grid = false;
  for (std::size_t i = 0; i < mu2.anchors.size(); ++i) {
    for (std::size_t j = 0; j < mu2.anchors.size(); ++j) {
      double lam = mu2.atom_matrix[i][j];
      if (lam == 0.0) continue;
      auto it = brackets.find({i, j});
      if (it == brackets.end())
        throw std::invalid_argument("chi_cov_closed: missing bracket for a nonzero atom");
      const CovariationCurve& b = it->second;
      if (!have_grid) {
        curve.grid = b.grid;
        curve.epsilon = b.epsilon;
        curve.values.assign(b.values.size(), 0.0);
        have_grid = true;
      } else if (!(curve.grid == b.grid)) {
        throw std::invalid_argument("chi_cov_closed: bracket grids differ");
      }
      for (std::size_t t = 0; t < curve.values.size(); ++t)
        curve.values[t] += lam * b.values[t];
    }
  }
  if (!have_grid) {
    // Only mixed / kernel mass: the closed form is identically zero.
    if (grid) {
      curve.grid = *grid;
    } else {
      int64_t steps = std::max<int64_t>(2, mu2.lag_grid.lags);
      curve.grid = TimeGrid{static_cast<double>(steps) * mu2.lag_grid.dt, steps};
    }
    curve.epsilon = 0.0;
    curve.values.assign(static_cast<std::size_t>(curve.grid.nodes()), 0.0);
  }
  return curve;
}

}  // namespace chivar
