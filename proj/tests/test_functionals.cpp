#include <doctest.h>

#include <cmath>

#include "core/functionals.hpp"
#include "core/rng.hpp"

using namespace chivar;

namespace {

struct Fixture {
  TimeGrid grid = build_grid(1.0, 64);
  LagGrid lags = build_lag_grid(0.5, grid);

  WindowSlice window(double a, double b) const {
    // affine window eta(y) = a + b*y
    WindowSlice w;
    w.lag_grid = lags;
    for (int64_t j = 0; j <= lags.lags; ++j) w.values.push_back(a + b * lags.node(j));
    return w;
  }

  WindowSlice random_window(uint64_t seed) const {
    WindowSlice w;
    w.lag_grid = lags;
    for (int64_t j = 0; j <= lags.lags; ++j)
      w.values.push_back(normal_draw(seed, 17, static_cast<uint64_t>(j)));
    return w;
  }
};

double directional(const WindowFunctional& f, double t, const WindowSlice& eta,
                   const WindowSlice& h, double delta) {
  WindowSlice up = eta, dn = eta;
  for (std::size_t j = 0; j < eta.values.size(); ++j) {
    up.values[j] += delta * h.values[j];
    dn.values[j] -= delta * h.values[j];
  }
  return (f(t, up) - f(t, dn)) / (2.0 * delta);
}

double pair_measure(const DaL2Measure& mu, const WindowSlice& h) { return pair_lag(mu, h); }

}  // namespace

TEST_CASE("derivative examples: product, integral, square") {
  Fixture fx;
  FunctionalSpec prod{"product_zero_lag", {{"lag", -0.5}}};
  WindowFunctional f = make_functional(prod, fx.lags);
  WindowSlice eta = fx.window(2.0, 2.0);  // eta(0)=2, eta(-0.5)=1... adjust below
  eta.values.front() = 3.0;               // eta(-0.5) = 3
  eta.values.back() = 2.0;                // eta(0) = 2
  DaL2Measure mu = derivative_parts(f, 0.0, eta);
  CHECK(mu.atom_at_zero() == doctest::Approx(3.0));
  CHECK(mu.atoms.front() == doctest::Approx(2.0));
  CHECK(!mu.has_density());

  FunctionalSpec integ{"integral_linear", {{"c0", 1.0}, {"c1", 0.0}}};
  WindowFunctional fi = make_functional(integ, fx.lags);
  DaL2Measure mi = derivative_parts(fi, 0.0, eta);
  CHECK(mi.atom_at_zero() == 0.0);
  CHECK(mi.has_density());
  CHECK(mi.density.front() == doctest::Approx(1.0));

  FunctionalSpec sq{"square_at_zero", {}};
  WindowFunctional fs = make_functional(sq, fx.lags);
  DaL2Measure ms = derivative_parts(fs, 0.0, eta);
  CHECK(ms.atom_at_zero() == doctest::Approx(4.0));
}

TEST_CASE("registry derivatives match central finite differences") {
  Fixture fx;
  std::vector<FunctionalSpec> specs = {
      {"value_at_zero", {}},
      {"value_at_lag", {{"lag", -0.25}}},
      {"square_at_zero", {}},
      {"product_zero_lag", {{"lag", -0.25}}},
      {"smooth_pair", {{"lag", -0.5}}},
      {"integral_constant", {{"weight", 1.5}}},
      {"integral_linear", {{"c0", 0.5}, {"c1", -1.0}}},
      {"lag_times_integral", {{"lag", -0.25}, {"weight", 2.0}}},
  };
  const double delta = 1e-3;
  for (const auto& spec : specs) {
    CAPTURE(spec.name);
    WindowFunctional f = make_functional(spec, fx.lags);
    for (uint64_t trial = 0; trial < 20; ++trial) {
      WindowSlice eta = fx.random_window(50 + trial);
      WindowSlice h = fx.random_window(150 + trial);
      DaL2Measure mu = derivative_parts(f, 0.0, eta);
      double lhs = pair_measure(mu, h);
      double rhs = directional(f, 0.0, eta, h, delta);
      CHECK(std::abs(lhs - rhs) <= 50.0 * delta * delta * std::max(1.0, std::abs(rhs)) + 1e-10);
    }
  }
}

TEST_CASE("constant functionals do not move the transform prediction") {
  Fixture fx;
  FunctionalSpec sq{"square_at_zero", {}};
  WindowFunctional f = make_functional(sq, fx.lags);
  WindowFunctional fc = sum_of(f, constant_functional(fx.lags, f.anchors(), 42.0));
  SampledPath w = wiener_path(fx.grid, 77, 0);
  CovariationCurve bracket;
  bracket.grid = fx.grid;
  bracket.epsilon = fx.grid.dt();
  bracket.values.resize(static_cast<std::size_t>(fx.grid.nodes()));
  for (int64_t k = 0; k <= fx.grid.steps; ++k)
    bracket.values[static_cast<std::size_t>(k)] = fx.grid.node(k);
  CovariationCurve a = predicted_transform_qv(f, w, bracket);
  CovariationCurve b = predicted_transform_qv(fc, w, bracket);
  for (std::size_t k = 0; k < a.values.size(); ++k) CHECK(a.values[k] == b.values[k]);
}

TEST_CASE("transform prediction closed forms") {
  Fixture fx;
  SampledPath w = wiener_path(fx.grid, 13, 0);
  CovariationCurve bracket;
  bracket.grid = fx.grid;
  bracket.epsilon = fx.grid.dt();
  bracket.values.resize(static_cast<std::size_t>(fx.grid.nodes()));
  for (int64_t k = 0; k <= fx.grid.steps; ++k)
    bracket.values[static_cast<std::size_t>(k)] = fx.grid.node(k);

  // F(eta) = eta(0): prediction is t itself
  WindowFunctional f0 = make_functional({"value_at_zero", {}}, fx.lags);
  CovariationCurve p0 = predicted_transform_qv(f0, w, bracket);
  for (int64_t k = 0; k <= fx.grid.steps; ++k)
    CHECK(p0.values[static_cast<std::size_t>(k)] == doctest::Approx(fx.grid.node(k)).epsilon(1e-12));

  // F(eta) = eta(a): prediction is (t+a)+
  WindowFunctional fa = make_functional({"value_at_lag", {{"lag", -0.5}}}, fx.lags);
  CovariationCurve pa = predicted_transform_qv(fa, w, bracket);
  for (int64_t k = 0; k <= fx.grid.steps; ++k) {
    double t = fx.grid.node(k);
    CHECK(pa.values[static_cast<std::size_t>(k)] ==
          doctest::Approx(std::max(t - 0.5, 0.0)).epsilon(1e-12));
  }

  // remainder prediction (anchors i >= 1 only) for F = eta(0) vanishes
  CovariationCurve r0 = predicted_transform_qv(f0, w, bracket, false);
  CHECK(r0.sup_abs() == 0.0);
  // and for F = eta(a) the full and remainder predictions agree
  CovariationCurve ra = predicted_transform_qv(fa, w, bracket, false);
  for (std::size_t k = 0; k < ra.values.size(); ++k) CHECK(ra.values[k] == pa.values[k]);
}

TEST_CASE("transform prediction tracks the direct estimate for f(eta(0), eta(a))") {
  TimeGrid grid = build_grid(1.0, 1 << 12);
  LagGrid lags = build_lag_grid(0.25, grid);
  WindowFunctional f = make_functional({"product_zero_lag", {{"lag", -0.25}}}, lags);
  CovariationCurve bracket;
  bracket.grid = grid;
  bracket.epsilon = grid.dt();
  bracket.values.resize(static_cast<std::size_t>(grid.nodes()));
  for (int64_t k = 0; k <= grid.steps; ++k)
    bracket.values[static_cast<std::size_t>(k)] = grid.node(k);

  double eps = 16.0 * grid.dt();
  const int seeds = 8;
  double mean_sup = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SampledPath w = wiener_path(grid, 7000, s);
    std::vector<double> tv(static_cast<std::size_t>(grid.nodes()));
    WindowSlice win;
    for (int64_t k = 0; k <= grid.steps; ++k) {
      window_into(w, k, lags, win);
      tv[static_cast<std::size_t>(k)] = f(grid.node(k), win);
    }
    SampledPath transformed(grid, std::move(tv));
    CovariationCurve direct = epsilon_covariation(transformed, transformed, eps);
    CovariationCurve predicted = predicted_transform_qv(f, w, bracket);
    mean_sup += sup_distance(direct, predicted) / seeds;
  }
  CHECK(mean_sup < 0.25);
}

TEST_CASE("support predictability: compactly supported, density, and atom-only cases") {
  Fixture fx;
  std::vector<WindowSlice> states = {fx.window(1.0, 0.0), fx.window(0.0, 1.0),
                                     fx.random_window(42)};
  std::vector<double> schedule = {4.0 * fx.lags.dt, 2.0 * fx.lags.dt, fx.lags.dt};

  // perp mass at the far anchor only: vanishes for eps < rho
  WindowFunctional far = make_functional({"value_at_lag", {{"lag", -0.5}}}, fx.lags);
  SppReport r1 = support_predictability_check(far, states, schedule, fx.grid, 1e9);
  for (double q : r1.quantities) CHECK(q == 0.0);
  CHECK(r1.bounded);

  // bounded continuous density: ratio bounded across the schedule
  WindowFunctional dens = make_functional({"integral_constant", {{"weight", 2.0}}}, fx.lags);
  SppReport r2 = support_predictability_check(dens, states, schedule, fx.grid, 3.0);
  CHECK(r2.bounded);
  for (double r : r2.ratios) CHECK(r <= 2.5);  // mass over [-eps,0] is about 2*eps

  // atom at zero only: perp is empty
  WindowFunctional zero = make_functional({"square_at_zero", {}}, fx.lags);
  SppReport r3 = support_predictability_check(zero, states, schedule, fx.grid, 1e9);
  for (double q : r3.quantities) CHECK(q == 0.0);

  CHECK_THROWS_AS(support_predictability_check(zero, {}, schedule, fx.grid, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(support_predictability_check(zero, states, {}, fx.grid, 1.0),
                  std::invalid_argument);
}
