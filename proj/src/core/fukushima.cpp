#include "core/fukushima.hpp"

#include <stdexcept>

namespace chivar {

SampledPath martingale_part(const WindowFunctional& f, const SampledPath& x,
                            const SampledPath& m) {
  if (!(x.grid == m.grid))
    throw std::invalid_argument("martingale_part: X and M on different grids");
  std::vector<double> v(static_cast<std::size_t>(x.grid.nodes()));
  WindowSlice win;
  window_into(x, 0, f.lag_grid(), win);
  v[0] = f(0.0, win);
  double acc = v[0];
  for (int64_t k = 0; k < x.grid.steps; ++k) {
    window_into(x, k, f.lag_grid(), win);
    double d0 = f.derivative(x.grid.node(k), win).atom_at_zero();
    acc += d0 * (m.values[static_cast<std::size_t>(k + 1)] - m.values[static_cast<std::size_t>(k)]);
    v[static_cast<std::size_t>(k + 1)] = acc;
  }
  return SampledPath(x.grid, std::move(v));
}

DecompositionResult decompose(const WindowFunctional& f, const SampledPath& x,
                              const SampledPath& m, const CovariationCurve& bracket_m,
                              const std::vector<SampledPath>& test_martingales,
                              const std::vector<double>& schedule, double ortho_threshold) {
  DecompositionResult out;
  std::vector<double> tv(static_cast<std::size_t>(x.grid.nodes()));
  WindowSlice win;
  for (int64_t k = 0; k <= x.grid.steps; ++k) {
    window_into(x, k, f.lag_grid(), win);
    tv[static_cast<std::size_t>(k)] = f(x.grid.node(k), win);
  }
  out.transformed = SampledPath(x.grid, std::move(tv));
  out.martingale_part = martingale_part(f, x, m);
  std::vector<double> rv(static_cast<std::size_t>(x.grid.nodes()));
  for (std::size_t k = 0; k < rv.size(); ++k)
    rv[k] = out.transformed.values[k] - out.martingale_part.values[k];
  out.remainder = SampledPath(x.grid, std::move(rv));
  for (const auto& n : test_martingales)
    out.orthogonality.push_back(orthogonality_diagnostic(out.remainder, n, schedule, ortho_threshold));
  if (!schedule.empty()) {
    out.remainder_qv_estimate = epsilon_covariation(out.remainder, out.remainder, schedule.back());
    out.remainder_qv_predicted = predicted_transform_qv(f, x, bracket_m, false);
    out.remainder_qv_sup_discrepancy =
        sup_distance(out.remainder_qv_estimate, out.remainder_qv_predicted);
  }
  return out;
}

}  // namespace chivar
