#pragma once

#include <string>
#include <vector>

#include "core/grid.hpp"

namespace chivar {

// Trapezoid quadrature of samples f on a lag grid.
double trapezoid(const std::vector<double>& f, double dt);

// Element of D_a + L^2([-tau,0]): Dirac atoms at the anchor lags plus a
// sampled density. atoms[i] belongs to anchors.lags[i] (ascending, so the
// atom at lag 0 is atoms.back()).
struct DaL2Measure {
  LagGrid lag_grid;
  AnchorSet anchors;
  std::vector<double> atoms;    // one per anchor
  std::vector<double> density;  // lag-grid samples; empty means 0

  double atom_at_zero() const { return atoms.back(); }
  bool has_density() const;
  // Same measure with the lag-0 atom removed (the perpendicular part).
  DaL2Measure perp() const;
  // Total-variation mass on [-eps, 0): atoms strictly below 0 with lag in
  // [-eps, 0) plus the trapezoid of |density| over [-eps, 0].
  double near_zero_mass(double eps) const;
};

DaL2Measure zero_measure(const LagGrid& grid, const AnchorSet& anchors);

// Element of chi^2([-tau,0]^2): atom matrix on anchor pairs, the two mixed
// families (density (x) atom and atom (x) density), and an L^2 kernel.
// chi^0 is the special case where only the lag-0 anchor is populated.
struct Chi2Measure {
  LagGrid lag_grid;
  AnchorSet anchors;
  std::vector<std::vector<double>> atom_matrix;  // [i][j], anchors x anchors
  std::vector<std::vector<double>> left_mixed;   // per anchor i: density g with g (x) delta_{a_i}
  std::vector<std::vector<double>> right_mixed;  // per anchor i: delta_{a_i} (x) density g
  std::vector<std::vector<double>> kernel;       // lag-grid x lag-grid; empty means 0

  bool has_atoms() const;
  bool has_left_mixed(std::size_t i) const;
  bool has_right_mixed(std::size_t i) const;
  bool has_kernel() const;
  double atom_l1() const;
};

Chi2Measure zero_chi2(const LagGrid& grid, const AnchorSet& anchors);

// <mu, eta> = sum_i lambda_i eta(a_i) + int g eta.
double pair_lag(const DaL2Measure& mu, const WindowSlice& eta);

// <mu2, eta1 (x) eta2> over all four blocks.
double pair_square(const Chi2Measure& mu2, const WindowSlice& eta1, const WindowSlice& eta2);

// True tensor product of two D_a + L^2 elements; factorizes through the
// pairings: pair_square(tensor, e1, e2) == pair_lag(a, e1) * pair_lag(b, e2).
Chi2Measure tensor_product(const DaL2Measure& a, const DaL2Measure& b);

std::string measure_to_json(const DaL2Measure& mu);
DaL2Measure measure_from_json(const std::string& text);
std::string chi2_to_json(const Chi2Measure& mu);
Chi2Measure chi2_from_json(const std::string& text);

}  // namespace chivar
