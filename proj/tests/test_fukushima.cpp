#include <doctest.h>

#include <cmath>

#include "core/fukushima.hpp"
#include "core/representation.hpp"

using namespace chivar;

namespace {

CovariationCurve identity_bracket(const TimeGrid& g) {
  CovariationCurve b;
  b.grid = g;
  b.epsilon = g.dt();
  b.values.resize(static_cast<std::size_t>(g.nodes()));
  for (int64_t k = 0; k <= g.steps; ++k) b.values[static_cast<std::size_t>(k)] = g.node(k);
  return b;
}

}  // namespace

TEST_CASE("unit functional telescopes to the martingale itself") {
  TimeGrid g = build_grid(1.0, 256);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"value_at_zero", {}}, lags);
  SampledPath w = wiener_path(g, 2, 0);
  SampledPath mbar = martingale_part(f, w, w);
  for (std::size_t k = 0; k < w.values.size(); ++k) CHECK(mbar.values[k] == w.values[k]);
}

TEST_CASE("lagged functional has constant martingale part") {
  TimeGrid g = build_grid(1.0, 256);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"value_at_lag", {{"lag", -0.25}}}, lags);
  SampledPath w = wiener_path(g, 3, 0);
  SampledPath mbar = martingale_part(f, w, w);
  for (double v : mbar.values) CHECK(v == w.values.front());
}

TEST_CASE("square functional reproduces the Ito identity at strong order half") {
  TimeGrid g = build_grid(1.0, 1 << 12);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"square_at_zero", {}}, lags);
  const int seeds = 8;
  double mse = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SampledPath w = wiener_path(g, 600, s);
    SampledPath mbar = martingale_part(f, w, w);
    double sup = 0.0;
    for (int64_t k = 0; k <= g.steps; ++k) {
      double wt = w.values[static_cast<std::size_t>(k)];
      double oracle = wt * wt - g.node(k);
      sup = std::max(sup, std::abs(mbar.values[static_cast<std::size_t>(k)] - oracle));
    }
    mse += sup * sup / seeds;
  }
  CHECK(std::sqrt(mse) <= 3.0 * std::sqrt(g.dt()));
}

TEST_CASE("decompose: unit functional gives zero remainder and clean diagnostics") {
  TimeGrid g = build_grid(1.0, 1 << 10);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"value_at_zero", {}}, lags);
  SampledPath w = wiener_path(g, 9, 0);
  SampledPath n = wiener_path(g, 9, 1);
  std::vector<double> schedule = {1.0 / 16, 1.0 / 64};
  DecompositionResult d = decompose(f, w, w, identity_bracket(g), {n}, schedule, 0.05);
  for (double v : d.remainder.values) CHECK(v == 0.0);
  for (double s : d.orthogonality.front().sup_norms) CHECK(s == 0.0);
  CHECK(d.orthogonality.front().verdict);
  CHECK(d.remainder_qv_estimate.sup_abs() == 0.0);
  CHECK(d.remainder_qv_sup_discrepancy == 0.0);
}

TEST_CASE("decompose is exactly additive") {
  TimeGrid g = build_grid(1.0, 512);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"smooth_pair", {{"lag", -0.25}}}, lags);
  SampledPath w = wiener_path(g, 12, 0);
  DecompositionResult d = decompose(f, w, w, identity_bracket(g), {}, {1.0 / 32}, 0.05);
  for (std::size_t k = 0; k < d.transformed.values.size(); ++k)
    CHECK(d.transformed.values[k] == d.martingale_part.values[k] + d.remainder.values[k]);
  CHECK(d.remainder.values.front() == 0.0);
}

TEST_CASE("lagged window functional matches the shifted-bracket closed form") {
  TimeGrid g = build_grid(1.0, 1 << 13);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"value_at_lag", {{"lag", -0.25}}}, lags);
  std::vector<double> schedule = {1.0 / 16, 1.0 / 64, 1.0 / 256};
  const int seeds = 8;
  std::vector<double> mean_est(static_cast<std::size_t>(g.nodes()), 0.0);
  double ortho_final = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SampledPath w = wiener_path(g, 800, s);
    DecompositionResult d = decompose(f, w, w, identity_bracket(g), {w}, schedule, 0.05);
    for (std::size_t k = 0; k < mean_est.size(); ++k)
      mean_est[k] += d.remainder_qv_estimate.values[k] / seeds;
    ortho_final += d.orthogonality.front().sup_norms.back() / seeds;
  }
  double sup = 0.0;
  for (int64_t k = 0; k <= g.steps; ++k) {
    double oracle = std::max(g.node(k) - 0.25, 0.0);
    sup = std::max(sup, std::abs(mean_est[static_cast<std::size_t>(k)] - oracle));
  }
  CHECK(sup < 0.08);
  CHECK(ortho_final < 0.08);
}

TEST_CASE("square functional: remainder has vanishing bracket and orthogonality") {
  TimeGrid g = build_grid(1.0, 1 << 12);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"square_at_zero", {}}, lags);
  std::vector<double> schedule = {1.0 / 16, 1.0 / 64, 1.0 / 256};
  SampledPath w = wiener_path(g, 14, 0);
  DecompositionResult d = decompose(f, w, w, identity_bracket(g), {w}, schedule, 0.2);
  // remainder is approximately t (bounded variation)
  double sup = 0.0;
  for (int64_t k = 0; k <= g.steps; ++k)
    sup = std::max(sup, std::abs(d.remainder.values[static_cast<std::size_t>(k)] - g.node(k)));
  CHECK(sup < 0.1);
  CHECK(d.remainder_qv_estimate.sup_abs() < 0.05);  // prediction is identically zero here
  CHECK(d.orthogonality.front().sup_norms.back() < 0.2);
  CHECK(d.orthogonality.front().verdict);
}

TEST_CASE("drift shift moves the martingale part by the drift integral") {
  TimeGrid g = build_grid(1.0, 512);
  LagGrid lags = build_lag_grid(0.25, g);
  WindowFunctional f = make_functional({"square_at_zero", {}}, lags);
  SampledPath w = wiener_path(g, 15, 0);
  double c = 0.8;
  std::vector<double> shifted(w.values.size());
  for (int64_t k = 0; k <= g.steps; ++k)
    shifted[static_cast<std::size_t>(k)] = w.values[static_cast<std::size_t>(k)] + c * g.node(k);
  SampledPath m2(g, std::move(shifted));
  SampledPath a = martingale_part(f, w, w);
  SampledPath b = martingale_part(f, w, m2);
  WindowSlice win;
  double drift_int = 0.0;
  for (int64_t k = 0; k < g.steps; ++k) {
    window_into(w, k, lags, win);
    drift_int += f.derivative(g.node(k), win).atom_at_zero() * c * g.dt();
    CHECK(b.values[static_cast<std::size_t>(k + 1)] ==
          doctest::Approx(a.values[static_cast<std::size_t>(k + 1)] + drift_int).epsilon(1e-10));
  }
}

TEST_CASE("conditional-expectation functional closes the representation gap") {
  // F(t, eta) = estimated u(t, eta) for the product payoff; the terminal gap
  // |F(T, X_T(.)) - Mbar_T| shrinks as the grid and the inner sample grow.
  SdeModel bm = make_model({"wiener", {}});
  auto gap_rms = [&](int64_t steps, int64_t inner, uint64_t seed) {
    TimeGrid g = build_grid(1.0, steps);
    LagGrid lags{1.0, g.steps, g.dt()};
    PathPayoff payoff = make_payoff({"product_two", {{"a1", 0.5}}}, 1.0);
    AnchorSet anchors = build_anchors({-1.0, 0.0}, lags);
    auto eval = [&, payoff](double t, const WindowSlice& eta) {
      int64_t k = snap_to_step(t, g.dt());
      if (k >= g.steps) {
        // terminal value: the payoff itself on the frozen history
        std::vector<double> vals;
        for (double a : payoff.anchors) vals.push_back(eta.at_lag_steps(g.steps - snap_to_step(a, g.dt())));
        SampledPath dummy(build_grid(1.0, 2), std::vector<double>(3, 0.0));
        return payoff.f(vals, dummy);
      }
      return estimate_u(payoff, bm, g, t, eta, inner, mix_seed(seed, 77 + k)).value;
    };
    LagGrid lg = lags;
    AnchorSet as = anchors;
    auto deriv = [&, payoff, lg, as](double t, const WindowSlice& eta) {
      int64_t k = snap_to_step(t, g.dt());
      DaL2Measure mu = zero_measure(lg, as);
      mu.atoms.back() =
          estimate_delta0(payoff, bm, g, t, eta, inner, mix_seed(seed, 500 + k)).value;
      return mu;
    };
    WindowFunctional f(lags, anchors, eval, deriv, {0.5});
    const int scenarios = 4;
    NoiseBatch noise(seed, g, scenarios);
    double mse = 0.0;
    for (int sc = 0; sc < scenarios; ++sc) {
      SampledPath x = simulate_flow(bm, 0.0, constant_window(lags, 1.0), g, noise.row(sc));
      SampledPath mbar = martingale_part(f, x, x);
      WindowSlice tail;
      window_into(x, g.steps, lags, tail);
      double gap = f(1.0, tail) - mbar.values.back();
      mse += gap * gap / scenarios;
    }
    return std::sqrt(mse);
  };
  double coarse = gap_rms(16, 256, 3100);
  double fine = gap_rms(64, 4096, 3200);
  CHECK(fine < coarse);
}
