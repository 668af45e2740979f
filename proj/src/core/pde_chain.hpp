#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/representation.hpp"
#include "core/sde.hpp"

namespace chivar {

struct LatticeSpec {
  double lo = 0.0;
  double hi = 1.0;
  int64_t count = 2;  // number of nodes

  double step() const { return (hi - lo) / static_cast<double>(count - 1); }
  double node(int64_t j) const { return lo + static_cast<double>(j) * step(); }
};

// Backward chain nu^i on [a_{i-1}, a_i], i = 1..N, each solved on
// (parameter lattice)^(i-1) x (time substeps) x (space lattice) with the
// diagonal matching condition nu^i(a_i, y) = nu^{i+1}(..., y; a_i, y).
class ChainSolution {
 public:
  struct Interval {
    double t_lo = 0.0, t_hi = 0.0;
    std::vector<double> times;     // substeps + 1 nodes, ascending
    int64_t n_param_points = 1;    // params.count^(i-1)
    std::vector<double> values;    // [(p * times + t) * space + y]
  };

  std::vector<double> anchors;  // 0 = a_0 < ... < a_N = T
  LatticeSpec space;
  LatticeSpec params;
  int64_t time_substeps = 0;
  std::vector<Interval> intervals;  // index i-1 holds nu^i
  std::function<double(const std::vector<double>&)> terminal;  // f, N args
  std::string scheme = "crank-nicolson, rannacher x2";
  double matching_residual = 0.0;
  double truncation_estimate = 0.0;
  bool stability_warning = false;

  std::size_t n() const { return intervals.size(); }
  double horizon() const { return anchors.back(); }

  // Index of the interval containing s (half-open [a_{i-1}, a_i), the last
  // interval closed at T). 1-based like nu^i.
  std::size_t interval_for(double s) const;

  // nu^i and its y-derivative at (frozen parameters, s, y): multilinear in
  // the parameters, linear in time, node-central differences in y. Out-of-
  // lattice coordinates are clamped; `clamped` is set when that happens.
  double value(double s, double y, const std::vector<double>& frozen,
               bool* clamped = nullptr) const;
  double derivative_y(double s, double y, const std::vector<double>& frozen,
                      bool* clamped = nullptr) const;
};

// Solves the chain for f(y_1, ..., y_N). Anchors are the interior payoff
// times plus T; N <= 3 is enforced (the parameter lattice is exponential
// in N). theta = 1/2 stepping with two implicit-Euler substeps after every
// terminal or matching slice.
ChainSolution solve_chain(const std::function<double(const std::vector<double>&)>& f,
                          const SdeModel& model, const std::vector<double>& anchors,
                          const LatticeSpec& space, const LatticeSpec& params,
                          int64_t time_substeps);

struct ChainHedgeResult {
  double initial_value = 0.0;
  std::vector<double> times;
  std::vector<double> strategy;
  double terminal_payoff = 0.0;
  double replication_error = 0.0;
  bool clamped = false;
};

// xi_t = d_y nu^i at the scenario state, accumulated against the scenario
// increments dX; H0 = nu^1(0, X_0).
ChainHedgeResult hedge_from_chain(const ChainSolution& sol, const SampledPath& scenario);

struct CrossValProbe {
  double s = 0.0;
  double y = 0.0;
  double mc = 0.0;
  double mc_stderr = 0.0;
  double pde = 0.0;
  double z = 0.0;
};

struct CrossValReport {
  std::vector<CrossValProbe> probes;
  double max_abs_z = 0.0;
};

// Compares estimate_delta0 against d_y nu^i at probe states (s, eta); the
// z-score denominator is the MC stderr plus a flat scheme-error allowance.
CrossValReport cross_validate(const ChainSolution& sol, const PathPayoff& payoff,
                              const SdeModel& model, const TimeGrid& grid,
                              const std::vector<std::pair<double, WindowSlice>>& probes,
                              int64_t inner_n, uint64_t seed, int threads = 1,
                              double scheme_allowance = 0.005);

// JSON metadata + one CSV value grid per interval, rows
// "param_index,t,y,value".
void save_chain(const ChainSolution& sol, const std::string& dir, const std::string& basename);

}  // namespace chivar
