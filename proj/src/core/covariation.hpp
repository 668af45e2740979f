#pragma once

#include <string>
#include <vector>

#include "core/grid.hpp"

namespace chivar {

// Node-wise values of t -> [X,Y]^eps_t. epsilon == 0 marks a closed-form /
// limit curve that did not come out of the regularization estimator.
struct CovariationCurve {
  TimeGrid grid;
  double epsilon = 0.0;
  std::vector<double> values;  // size steps + 1, values[0] == 0

  double terminal() const { return values.back(); }
  double sup_abs() const;
};

// Sup-norm of the node-wise difference of two curves on a shared grid.
double sup_distance(const CovariationCurve& a, const CovariationCurve& b);

// Validates eps = k*dt, 1 <= k <= M, on the shared grid of x and y;
// returns k.
int64_t epsilon_steps(const SampledPath& x, const SampledPath& y, double eps);

// [X,Y]^eps_t = int_0^t (X_{s+eps}-X_s)(Y_{s+eps}-Y_s)/eps ds as a left-point
// Riemann sum on the grid; values past T use the boundary extension.
CovariationCurve epsilon_covariation(const SampledPath& x, const SampledPath& y, double eps);

// int_0^t H_s (X_{s+eps}-X_s)(Y_{s+eps}-Y_s)/eps ds, same discretization.
CovariationCurve weighted_bracket_integral(const SampledPath& h, const SampledPath& x,
                                           const SampledPath& y, double eps);

struct OrthoReport {
  std::vector<double> schedule;   // strictly decreasing eps values
  std::vector<double> sup_norms;  // sup_t |[A,N]^eps_t| per eps
  bool verdict = false;
};

// Decay slack: each sup-norm may exceed its predecessor by at most this
// factor and still count as non-increasing.
inline constexpr double kOrthoDecaySlack = 1.25;

// verdict: non-increase within the slack factor across the schedule and
// final sup-norm <= threshold.
OrthoReport orthogonality_diagnostic(const SampledPath& a, const SampledPath& n,
                                     const std::vector<double>& schedule, double threshold);

std::string ortho_report_json(const OrthoReport& report);

// CSV with header "t,estimate".
void write_curve_csv(const CovariationCurve& curve, const std::string& file);

}  // namespace chivar
