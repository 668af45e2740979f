#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "core/pde_chain.hpp"

using namespace chivar;

namespace {

double bs_call(double spot, double strike, double sigma, double T) {
  double v = sigma * std::sqrt(T);
  double d1 = (std::log(spot / strike) + 0.5 * v * v) / v;
  double d2 = d1 - v;
  return spot * normal_cdf(d1) - strike * normal_cdf(d2);
}

}  // namespace

TEST_CASE("linear terminal data is in the scheme kernel") {
  for (const char* name : {"constant", "affine", "degenerate", "sinusoidal"}) {
    CAPTURE(name);
    SdeModel model = make_model({name, {{"sigma", 0.4}, {"sigma0", 0.3}, {"sigma1", 0.1}}});
    auto f = [](const std::vector<double>& v) { return v[0]; };
    ChainSolution sol =
        solve_chain(f, model, {0.0, 1.0}, LatticeSpec{-4.0, 4.0, 81}, LatticeSpec{-4.0, 4.0, 5}, 32);
    for (double y : {-2.0, -0.5, 0.0, 1.5})
      CHECK(sol.value(0.0, y, {}) == doctest::Approx(y).epsilon(1e-10));
    // hedging a linear claim telescopes exactly
    TimeGrid grid = build_grid(1.0, 64);
    LagGrid lags{1.0, grid.steps, grid.dt()};
    NoiseBatch noise(7, grid, 1);
    SampledPath x = simulate_flow(model, 0.0, constant_window(lags, 1.0), grid, noise.row(0));
    ChainHedgeResult h = hedge_from_chain(sol, x);
    CHECK(std::abs(h.replication_error) < 1e-9);
    for (double xi : h.strategy) CHECK(xi == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("quadratic terminal data reproduces the heat closed form") {
  double sigma = 1.0;
  SdeModel model = make_model({"constant", {{"sigma", sigma}}});
  auto f = [](const std::vector<double>& v) { return v[0] * v[0]; };
  ChainSolution sol = solve_chain(f, model, {0.0, 1.0}, LatticeSpec{-8.0, 8.0, 161},
                                  LatticeSpec{-8.0, 8.0, 5}, 64);
  for (double s : {0.0, 0.25, 0.5})
    for (double y : {-1.5, 0.0, 0.5, 2.0})
      CHECK(sol.value(s, y, {}) == doctest::Approx(y * y + sigma * sigma * (1.0 - s)).epsilon(1e-6));
}

TEST_CASE("two-interval product payoff solves in closed form") {
  SdeModel model = make_model({"wiener", {}});
  auto f = [](const std::vector<double>& v) { return v[0] * v[1]; };
  double a1 = 0.5;
  ChainSolution sol = solve_chain(f, model, {0.0, a1, 1.0}, LatticeSpec{-8.0, 8.0, 161},
                                  LatticeSpec{-8.0, 8.0, 41}, 64);
  // second interval: nu^2(s, y | y1) = y1 * y
  CHECK(sol.value(0.75, 1.2, {0.8}) == doctest::Approx(0.8 * 1.2).epsilon(1e-8));
  CHECK(sol.derivative_y(0.75, 1.2, {0.8}) == doctest::Approx(0.8).epsilon(1e-8));
  // first interval: nu^1(s, y) = y^2 + (a1 - s)
  for (double s : {0.0, 0.25})
    for (double y : {-1.0, 0.4, 1.5})
      CHECK(sol.value(s, y, {}) == doctest::Approx(y * y + (a1 - s)).epsilon(1e-5));
  // matching residual within the interpolation budget
  CHECK(sol.matching_residual <= 10.0 * std::max(sol.truncation_estimate, 1e-12));

  // hedge along a scenario: xi = X_{a1} on (a1, T]
  TimeGrid grid = build_grid(1.0, 128);
  LagGrid lags{1.0, grid.steps, grid.dt()};
  NoiseBatch noise(17, grid, 1);
  SampledPath x = simulate_flow(model, 0.0, constant_window(lags, 0.5), grid, noise.row(0));
  ChainHedgeResult h = hedge_from_chain(sol, x);
  double xa1 = x.values[64];
  for (std::size_t k = 70; k < h.strategy.size(); ++k)
    CHECK(h.strategy[k] == doctest::Approx(xa1).epsilon(1e-6));
}

TEST_CASE("comparison principle surrogate for a nonnegative payoff") {
  SdeModel model = make_model({"affine", {{"sigma", 0.2}}});
  auto f = [](const std::vector<double>& v) { return std::max(v[0] - 1.0, 0.0); };
  ChainSolution sol = solve_chain(f, model, {0.0, 1.0}, LatticeSpec{0.0, 4.0, 201},
                                  LatticeSpec{0.0, 4.0, 5}, 64);
  double min_v = 0.0;
  for (double v : sol.intervals[0].values) min_v = std::min(min_v, v);
  CHECK(min_v >= -1e-8);
}

TEST_CASE("Black-Scholes reproduction with a raw kink") {
  double sigma = 0.2;
  SdeModel model = make_model({"affine", {{"sigma", sigma}}});
  auto f = [](const std::vector<double>& v) { return std::max(v[0] - 1.0, 0.0); };
  ChainSolution sol = solve_chain(f, model, {0.0, 1.0}, LatticeSpec{0.0, 4.0, 401},
                                  LatticeSpec{0.0, 4.0, 5}, 256);
  double price = sol.value(0.0, 1.0, {});
  double oracle = bs_call(1.0, 1.0, sigma, 1.0);
  CHECK(std::abs(price - oracle) / oracle < 0.01);
}

TEST_CASE("chain values are martingales along simulated scenarios") {
  SdeModel model = make_model({"affine", {{"sigma", 0.2}}});
  auto f = [](const std::vector<double>& v) { return v[0] * v[1]; };
  ChainSolution sol = solve_chain(f, model, {0.0, 0.5, 1.0}, LatticeSpec{0.0, 4.0, 201},
                                  LatticeSpec{0.0, 4.0, 41}, 64);
  TimeGrid grid = build_grid(1.0, 64);
  LagGrid lags{1.0, grid.steps, grid.dt()};
  const int scenarios = 32;
  NoiseBatch noise(23, grid, scenarios);
  std::vector<double> increments;
  for (int sc = 0; sc < scenarios; ++sc) {
    SampledPath x = simulate_flow(model, 0.0, constant_window(lags, 1.0), grid, noise.row(sc));
    double prev = 0.0;
    bool have = false;
    for (int64_t k : {8, 24, 40, 56}) {
      double s = grid.node(k);
      std::vector<double> frozen;
      if (s >= 0.5) frozen.push_back(x.values[32]);
      double v = sol.value(s, x.values[static_cast<std::size_t>(k)], frozen);
      if (have) increments.push_back(v - prev);
      prev = v;
      have = true;
    }
  }
  double mean = 0.0, var = 0.0;
  for (double v : increments) mean += v;
  mean /= static_cast<double>(increments.size());
  for (double v : increments) var += (v - mean) * (v - mean);
  var /= static_cast<double>(increments.size() - 1);
  CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / static_cast<double>(increments.size())));
}

TEST_CASE("cross validation z-scores for closed-form cases") {
  TimeGrid grid = build_grid(1.0, 1 << 8);
  LagGrid lags{1.0, grid.steps, grid.dt()};

  SUBCASE("linear payoff") {
    SdeModel model = make_model({"constant", {{"sigma", 0.5}}});
    PathPayoff payoff = make_payoff({"terminal_linear", {}}, 1.0);
    auto f = [](const std::vector<double>& v) { return v[0]; };
    ChainSolution sol = solve_chain(f, model, {0.0, 1.0}, LatticeSpec{-4.0, 4.0, 161},
                                    LatticeSpec{-4.0, 4.0, 5}, 64);
    std::vector<std::pair<double, WindowSlice>> probes;
    for (double s : {0.125, 0.5, 0.8125})
      probes.emplace_back(s, constant_window(lags, 0.3));
    CrossValReport r = cross_validate(sol, payoff, model, grid, probes, 2048, 55);
    CHECK(r.max_abs_z <= 3.0);
    for (const auto& p : r.probes) {
      CHECK(p.pde == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(p.mc == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("square payoff") {
    SdeModel model = make_model({"constant", {{"sigma", 0.5}}});
    PathPayoff payoff = make_payoff({"terminal_square", {}}, 1.0);
    auto f = [](const std::vector<double>& v) { return v[0] * v[0]; };
    ChainSolution sol = solve_chain(f, model, {0.0, 1.0}, LatticeSpec{-6.0, 6.0, 241},
                                    LatticeSpec{-6.0, 6.0, 5}, 64);
    std::vector<std::pair<double, WindowSlice>> probes;
    probes.emplace_back(0.25, constant_window(lags, 0.7));
    probes.emplace_back(0.625, constant_window(lags, -0.4));
    CrossValReport r = cross_validate(sol, payoff, model, grid, probes, 1 << 13, 56);
    CHECK(r.max_abs_z <= 3.0);
    CHECK(r.probes[0].pde == doctest::Approx(1.4).epsilon(1e-4));
  }

  SUBCASE("product payoff past the first anchor") {
    SdeModel model = make_model({"wiener", {}});
    PathPayoff payoff = make_payoff({"product_two", {{"a1", 0.5}}}, 1.0);
    auto f = [](const std::vector<double>& v) { return v[0] * v[1]; };
    ChainSolution sol = solve_chain(f, model, {0.0, 0.5, 1.0}, LatticeSpec{-6.0, 6.0, 161},
                                    LatticeSpec{-6.0, 6.0, 41}, 48);
    WindowSlice eta = constant_window(lags, 0.0);
    for (int64_t j = 0; j <= lags.lags; ++j)
      eta.values[static_cast<std::size_t>(j)] = 1.0 + 0.5 * lags.node(j);
    std::vector<std::pair<double, WindowSlice>> probes = {{0.75, eta}};
    CrossValReport r = cross_validate(sol, payoff, model, grid, probes, 1 << 12, 57);
    CHECK(r.max_abs_z <= 3.0);
    // frozen coordinate eta(a1 - s) = 1 + 0.5 * (0.5 - 0.75)
    CHECK(r.probes[0].pde == doctest::Approx(0.875).epsilon(1e-3));

    std::vector<std::pair<double, WindowSlice>> bad = {{0.5, eta}};
    CHECK_THROWS_AS(cross_validate(sol, payoff, model, grid, bad, 64, 58),
                    std::invalid_argument);
  }
}

TEST_CASE("chain persistence writes metadata and grids") {
  SdeModel model = make_model({"wiener", {}});
  auto f = [](const std::vector<double>& v) { return v[0] * v[1]; };
  ChainSolution sol = solve_chain(f, model, {0.0, 0.5, 1.0}, LatticeSpec{-2.0, 2.0, 17},
                                  LatticeSpec{-2.0, 2.0, 5}, 8);
  auto dir = std::filesystem::temp_directory_path() / "chivar_chain_test";
  std::filesystem::create_directories(dir);
  save_chain(sol, dir.string(), "chain");
  CHECK(std::filesystem::exists(dir / "chain_meta.json"));
  for (int i = 1; i <= 2; ++i) {
    auto file = dir / ("chain_interval" + std::to_string(i) + ".csv");
    REQUIRE(std::filesystem::exists(file));
    std::ifstream in(file);
    std::string header;
    std::getline(in, header);
    CHECK(header == "param_index,t,y,value");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    std::size_t expect = static_cast<std::size_t>(sol.intervals[i - 1].n_param_points) * 9 * 17;
    CHECK(rows == expect);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("chain preconditions") {
  SdeModel model = make_model({"wiener", {}});
  auto f = [](const std::vector<double>& v) { return v[0]; };
  CHECK_THROWS_AS(solve_chain(f, model, {0.0, 0.2, 0.4, 0.6, 1.0}, LatticeSpec{-1.0, 1.0, 9},
                              LatticeSpec{-1.0, 1.0, 3}, 8),
                  std::invalid_argument);  // N = 4 unsupported
  CHECK_THROWS_AS(solve_chain(f, model, {0.1, 1.0}, LatticeSpec{-1.0, 1.0, 9},
                              LatticeSpec{-1.0, 1.0, 3}, 8),
                  std::invalid_argument);  // anchors must start at 0
  ChainSolution sol = solve_chain(f, model, {0.0, 1.0}, LatticeSpec{-1.0, 1.0, 7},
                                  LatticeSpec{-1.0, 1.0, 3}, 4);
  CHECK(sol.stability_warning);  // coarse lattice flagged
}
