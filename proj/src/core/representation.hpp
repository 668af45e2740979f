#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/sde.hpp"

namespace chivar {

// Raised when a representation denominator degenerates (s = T, or the
// weight's remaining L^2 mass vanishes).
struct degenerate_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MCEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  int64_t n_paths = 0;
  uint64_t seed = 0;
};

// Path payoff Phi(gamma) on C([0,T]). Three kinds:
//  - discrete: f(gamma(a_1), ..., gamma(a_N))
//  - integralized: f(gamma(a_1), ..., gamma(a_N), gamma) with an L^2 part
//  - weighted increment: f(int phi d gamma), phi in C^1, phi(T) != 0,
//    the integral read as phi(T)gamma(T) - int gamma dphi.
struct PathPayoff {
  std::string name;
  std::vector<double> anchors;  // a_1 < ... < a_N = T

  std::function<double(const std::vector<double>&, const SampledPath&)> f;
  std::function<std::vector<double>(const std::vector<double>&, const SampledPath&)> grad_anchors;
  // nabla_rho f sampled on the full time grid; unset when there is no L^2 part.
  std::function<std::vector<double>(const std::vector<double>&, const SampledPath&)> grad_density;

  bool weighted_increment = false;
  std::function<double(double)> phi;
  std::function<double(double)> phi_dot;
  std::function<double(double)> wi_f;  // may be non-smooth

  bool has_density() const { return static_cast<bool>(grad_density); }
  double value(const SampledPath& gamma) const;
  std::vector<double> anchor_values(const SampledPath& gamma) const;
};

struct PayoffSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
};

std::vector<std::string> payoff_registry_names();
PathPayoff make_payoff(const PayoffSpec& spec, double horizon);

// Fixed-block Monte-Carlo reduction: sample(i, out) fills `dim` slots per
// draw; partial sums are kept per block and combined in block order, so the
// result is independent of the worker count.
struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
};
std::vector<MeanStderr> mc_vector_stats(int64_t n, int threads, std::size_t dim,
                                        const std::function<void(int64_t, double*)>& sample);

// u(s, eta) = E[Phi(Y^{s,eta})] by Monte Carlo over n flow paths.
MCEstimate estimate_u(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                      double s, const WindowSlice& eta, int64_t n, uint64_t seed,
                      int threads = 1);

// Lag-0 atom of Du(s, .): anchor terms weighted by the first-variation
// exponential, plus the time-integral term for payoffs with an L^2 part.
// Anchors at exactly s contribute to the frozen side (right-limit in s).
MCEstimate estimate_delta0(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                           double s, const WindowSlice& eta, int64_t n, uint64_t seed,
                           int threads = 1);

// Perpendicular part of Du(s, .) on [-T, 0]: frozen-anchor atoms at a_i - s
// and the density E[nabla_{r+s} f] on [-s, 0).
struct LagDerivative {
  LagGrid lag_grid;
  std::vector<double> atom_lags;  // a_i - s for frozen anchors
  std::vector<double> atoms;
  std::vector<double> atom_stderr;
  std::vector<double> density;  // per lag node
  std::vector<double> density_stderr;

  // <measure, h> for a bump h sampled on the lag grid, plus a conservative
  // stderr bound for the pairing.
  double pair(const WindowSlice& h) const;
  double pair_stderr(const WindowSlice& h) const;
};

LagDerivative estimate_perp(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                            double s, const WindowSlice& eta, int64_t n, uint64_t seed,
                            int threads = 1);

struct HedgeResult {
  double initial_value = 0.0;
  double initial_stderr = 0.0;
  std::vector<double> rebalance_times;
  std::vector<double> strategy;         // delta held from each rebalance node
  std::vector<double> strategy_stderr;
  double terminal_payoff = 0.0;
  double replication_error = 0.0;  // h - H0 - accumulated hedge gains
};

// One outer scenario (seed, scenario_index) hedged by nested Monte Carlo:
// the position is refreshed every `rebalance_stride` grid steps using
// estimate_delta0 with a sub-seed keyed by the rebalance node, and gains
// accrue as sum of delta * sigma(t, X_t) * dW over the outer increments.
HedgeResult replicate(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                      const WindowSlice& eta0, uint64_t scenario_seed, int64_t scenario_index,
                      int64_t rebalance_stride, int64_t inner_n, uint64_t seed,
                      int threads = 1);

// Weighted-increment representation under Brownian dynamics; f need not be
// differentiable. delta0 = phi(s)/int_s^T phi^2 * E[Phi(Y^{s,eta}) int phi dW];
// perp carries the -phi(0) atom at lag -s (s > 0) and the -phi_dot(s+y)
// density on [-s, 0).
struct MalliavinDerivatives {
  MCEstimate delta0;
  LagDerivative perp;
};

MalliavinDerivatives malliavin_derivatives(const PathPayoff& payoff, const SdeModel& model,
                                           const TimeGrid& grid, double s, const WindowSlice& eta,
                                           int64_t n, uint64_t seed, int threads = 1);

double normal_cdf(double x);

}  // namespace chivar
