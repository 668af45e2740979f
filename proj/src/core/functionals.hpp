#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/covariation.hpp"
#include "core/measures.hpp"

namespace chivar {

// Fills `out` with the window of `path` at grid step `center_step`, reusing
// out's storage.
void window_into(const SampledPath& path, int64_t center_step, const LagGrid& lags,
                 WindowSlice& out);

// Path functional F(t, eta) of class C^1 with derivative measure in
// D_a + L^2. `breakpoints` lists times in (0,T) where t-continuity of the
// lag-0 atom may fail; evaluation functions are expected to return the
// right-limit value there.
class WindowFunctional {
 public:
  using Eval = std::function<double(double, const WindowSlice&)>;
  using Deriv = std::function<DaL2Measure(double, const WindowSlice&)>;

  WindowFunctional() = default;
  WindowFunctional(LagGrid lag_grid, AnchorSet anchors, Eval eval, Deriv deriv,
                   std::vector<double> breakpoints = {});

  double operator()(double t, const WindowSlice& eta) const { return eval_(t, eta); }
  DaL2Measure derivative(double t, const WindowSlice& eta) const;

  const LagGrid& lag_grid() const { return lag_grid_; }
  const AnchorSet& anchors() const { return anchors_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }

 private:
  LagGrid lag_grid_{};
  AnchorSet anchors_{};
  Eval eval_;
  Deriv deriv_;
  std::vector<double> breakpoints_;
};

// F(eta) = f(eta(a_0), ..., eta(a_N)) with anchor values passed in ascending
// lag order (index 0 is the -tau anchor, last is lag 0).
WindowFunctional discrete_functional(const LagGrid& grid, const AnchorSet& anchors,
                                     std::function<double(const std::vector<double>&)> f,
                                     std::function<std::vector<double>(const std::vector<double>&)> grad);

// F(eta) = int g eta over [-tau, 0], g sampled on the lag grid.
WindowFunctional linear_integral_functional(const LagGrid& grid, const AnchorSet& anchors,
                                            std::vector<double> g);

WindowFunctional constant_functional(const LagGrid& grid, const AnchorSet& anchors, double c);
WindowFunctional sum_of(const WindowFunctional& a, const WindowFunctional& b);
WindowFunctional product_of(const WindowFunctional& a, const WindowFunctional& b);

// Full derivative measure; the split into the lag-0 atom, anchor atoms and
// the absolutely continuous part is read off the returned measure.
DaL2Measure derivative_parts(const WindowFunctional& f, double t, const WindowSlice& eta);

// [F(X(.))]_t prediction: sum over anchors of
// int_0^t (atom_i(s))^2 d[M]_{s+a_i}, shifted increments vanishing while
// s + a_i <= 0. With include_zero_atom = false this is the prediction for
// the remainder bracket (anchors i >= 1 only).
CovariationCurve predicted_transform_qv(const WindowFunctional& f, const SampledPath& x,
                                        const CovariationCurve& bracket_m,
                                        bool include_zero_atom = true);

struct SppReport {
  std::vector<double> schedule;
  std::vector<double> quantities;  // time integral of the sampled sup mass
  std::vector<double> ratios;      // quantity / eps
  bool bounded = false;
};

// Support-predictability probe: for each eps, integrates over [0,T] the
// sampled sup over `states` of the total-variation mass of the
// perpendicular derivative on [-eps, 0); bounded iff every ratio
// quantity/eps stays below ratio_cap.
SppReport support_predictability_check(const WindowFunctional& f,
                                       const std::vector<WindowSlice>& states,
                                       const std::vector<double>& schedule,
                                       const TimeGrid& grid, double ratio_cap);

std::string spp_report_json(const SppReport& report);

// Named functionals used by the experiment configs. Parameters are read
// from a key -> value map.
struct FunctionalSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
};

std::vector<std::string> functional_registry_names();
WindowFunctional make_functional(const FunctionalSpec& spec, const LagGrid& grid);

}  // namespace chivar
