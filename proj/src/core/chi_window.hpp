#pragma once

#include <map>
#include <utility>

#include "core/covariation.hpp"
#include "core/measures.hpp"

namespace chivar {

// Path shifted by a non-positive number of grid steps, values below 0 taken
// from the boundary extension. Exact node shift, no interpolation.
SampledPath lagged_path(const SampledPath& x, int64_t lag_steps);

// [X_{.+a_i}, Y_{.+a_j}]^eps via the regularization estimator applied to the
// shifted paths.
CovariationCurve lagged_bracket(const SampledPath& x, const SampledPath& y, int64_t ai_steps,
                                int64_t aj_steps, double eps);

using BracketMap = std::map<std::pair<std::size_t, std::size_t>, CovariationCurve>;

// Brackets for every anchor pair with a nonzero atom in mu2.
BracketMap estimate_lag_brackets(const SampledPath& x, const SampledPath& y,
                                 const Chi2Measure& mu2, double eps);

// Direct estimator: t -> int_0^t <mu2, dX window (x) dY window>/eps ds,
// left-point sum. Component costs: atoms O(N^2), mixed O(L), kernel O(L^2)
// per step; absent components are skipped.
CovariationCurve chi_cov_direct(const SampledPath& x, const SampledPath& y,
                                const Chi2Measure& mu2, double eps);

// Closed form: sum over anchor pairs of mu2({a_i,a_j}) * bracket_{ij};
// mixed and kernel parts contribute zero. `grid` supplies the output grid
// when no atom needs a bracket (the identically-zero case).
CovariationCurve chi_cov_closed(const BracketMap& brackets, const Chi2Measure& mu2,
                                const TimeGrid* grid = nullptr);

}  // namespace chivar
