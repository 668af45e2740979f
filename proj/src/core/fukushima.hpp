#pragma once

#include <vector>

#include "core/covariation.hpp"
#include "core/functionals.hpp"

namespace chivar {

// M-bar: F(0, X_0(.)) + int_0^t D^{delta_0}F(s, X_s(.)) dM_s, the Ito
// integral taken as a strictly left-point sum.
SampledPath martingale_part(const WindowFunctional& f, const SampledPath& x,
                            const SampledPath& m);

struct DecompositionResult {
  SampledPath transformed;      // t -> F(t, X_t(.))
  SampledPath martingale_part;  // M-bar
  SampledPath remainder;        // A-bar = transformed - M-bar, starts at 0
  std::vector<OrthoReport> orthogonality;  // one per test martingale
  CovariationCurve remainder_qv_estimate;  // eps-estimated [A-bar] at the final eps
  CovariationCurve remainder_qv_predicted; // anchor sum against the shifted [M]
  double remainder_qv_sup_discrepancy = 0.0;
};

// Splits F(t, X_t(.)) into the explicit martingale part and the remainder,
// then runs the diagnostic battery: orthogonality of the remainder against
// each test martingale across the eps schedule, and the remainder-bracket
// comparison against the shifted-[M] prediction.
DecompositionResult decompose(const WindowFunctional& f, const SampledPath& x,
                              const SampledPath& m, const CovariationCurve& bracket_m,
                              const std::vector<SampledPath>& test_martingales,
                              const std::vector<double>& schedule, double ortho_threshold);

}  // namespace chivar
