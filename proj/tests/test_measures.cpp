#include <doctest.h>

#include <cmath>

#include "core/measures.hpp"
#include "core/rng.hpp"

using namespace chivar;

namespace {

struct Fixture {
  TimeGrid grid = build_grid(1.0, 16);
  LagGrid lags = build_lag_grid(1.0, grid);
  AnchorSet anchors = build_anchors({-1.0, -0.5, 0.0}, lags);

  WindowSlice window(double (*f)(double)) const {
    WindowSlice w;
    w.lag_grid = lags;
    for (int64_t j = 0; j <= lags.lags; ++j) w.values.push_back(f(lags.node(j)));
    return w;
  }
};

double slice_id(double y) { return y; }
double slice_two(double) { return 2.0; }
double slice_one(double) { return 1.0; }

}  // namespace

TEST_CASE("pair_lag atoms and densities") {
  Fixture fx;
  DaL2Measure delta0 = zero_measure(fx.lags, fx.anchors);
  delta0.atoms.back() = 1.0;
  WindowSlice eta = fx.window(slice_two);
  eta.values.back() = 5.0;
  CHECK(pair_lag(delta0, eta) == 5.0);

  DaL2Measure dens = zero_measure(fx.lags, fx.anchors);
  dens.density.assign(static_cast<std::size_t>(fx.lags.nodes()), 1.0);
  CHECK(pair_lag(dens, fx.window(slice_two)) == doctest::Approx(2.0));

  DaL2Measure diff = zero_measure(fx.lags, fx.anchors);
  diff.atoms.back() = 1.0;   // delta_0
  diff.atoms.front() = -1.0; // -delta_{-1}
  CHECK(pair_lag(diff, fx.window(slice_id)) == doctest::Approx(1.0));
}

TEST_CASE("pair_square blocks") {
  Fixture fx;
  Chi2Measure atom = zero_chi2(fx.lags, fx.anchors);
  atom.atom_matrix[2][2] = 1.0;  // delta_{(0,0)}
  WindowSlice e1 = fx.window(slice_one);
  e1.values.back() = 2.0;
  WindowSlice e2 = fx.window(slice_one);
  e2.values.back() = 3.0;
  CHECK(pair_square(atom, e1, e2) == 6.0);

  Chi2Measure kern = zero_chi2(fx.lags, fx.anchors);
  kern.kernel.assign(static_cast<std::size_t>(fx.lags.nodes()),
                     std::vector<double>(static_cast<std::size_t>(fx.lags.nodes()), 1.0));
  CHECK(pair_square(kern, fx.window(slice_one), fx.window(slice_one)) == doctest::Approx(1.0));

  Chi2Measure mixed = zero_chi2(fx.lags, fx.anchors);
  mixed.left_mixed[2].assign(static_cast<std::size_t>(fx.lags.nodes()), 1.0);
  WindowSlice e4 = fx.window(slice_one);
  e4.values.back() = 4.0;
  CHECK(pair_square(mixed, fx.window(slice_one), e4) == doctest::Approx(4.0));
}

TEST_CASE("tensor product structure") {
  Fixture fx;
  DaL2Measure d0 = zero_measure(fx.lags, fx.anchors);
  d0.atoms.back() = 1.0;
  Chi2Measure t = tensor_product(d0, d0);
  CHECK(t.atom_matrix[2][2] == 1.0);
  CHECK(t.atom_matrix[0][0] == 0.0);
  CHECK(!t.has_kernel());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(!t.has_left_mixed(i));
    CHECK(!t.has_right_mixed(i));
  }

  DaL2Measure mixed = d0;
  mixed.density.assign(static_cast<std::size_t>(fx.lags.nodes()), 1.0);
  Chi2Measure t2 = tensor_product(mixed, d0);
  CHECK(t2.atom_matrix[2][2] == 1.0);
  CHECK(t2.has_left_mixed(2));   // g (x) delta_0
  CHECK(!t2.has_right_mixed(2)); // d0 has no density
  CHECK(!t2.has_kernel());

  DaL2Measure g = zero_measure(fx.lags, fx.anchors);
  g.density.assign(static_cast<std::size_t>(fx.lags.nodes()), 2.0);
  DaL2Measure h = zero_measure(fx.lags, fx.anchors);
  h.density.assign(static_cast<std::size_t>(fx.lags.nodes()), 3.0);
  Chi2Measure t3 = tensor_product(g, h);
  CHECK(t3.has_kernel());
  CHECK(t3.kernel[4][7] == doctest::Approx(6.0));
  CHECK(!t3.has_atoms());
}

TEST_CASE("factorization identity to machine precision") {
  Fixture fx;
  auto random_measure = [&fx](uint64_t seed) {
    DaL2Measure mu = zero_measure(fx.lags, fx.anchors);
    for (std::size_t i = 0; i < mu.atoms.size(); ++i)
      mu.atoms[i] = normal_draw(seed, 0, i);
    mu.density.resize(static_cast<std::size_t>(fx.lags.nodes()));
    for (std::size_t j = 0; j < mu.density.size(); ++j)
      mu.density[j] = normal_draw(seed, 1, j);
    return mu;
  };
  auto random_window = [&fx](uint64_t seed) {
    WindowSlice w;
    w.lag_grid = fx.lags;
    for (int64_t j = 0; j <= fx.lags.lags; ++j)
      w.values.push_back(normal_draw(seed, 2, static_cast<uint64_t>(j)));
    return w;
  };
  for (uint64_t trial = 0; trial < 20; ++trial) {
    DaL2Measure a = random_measure(100 + trial);
    DaL2Measure b = random_measure(200 + trial);
    WindowSlice e1 = random_window(300 + trial);
    WindowSlice e2 = random_window(400 + trial);
    double lhs = pair_square(tensor_product(a, b), e1, e2);
    double rhs = pair_lag(a, e1) * pair_lag(b, e2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("tensor product is bilinear") {
  Fixture fx;
  DaL2Measure a = zero_measure(fx.lags, fx.anchors);
  a.atoms = {1.0, -2.0, 0.5};
  DaL2Measure b = zero_measure(fx.lags, fx.anchors);
  b.atoms = {0.0, 1.0, 3.0};
  DaL2Measure c = zero_measure(fx.lags, fx.anchors);
  c.atoms = {2.0, 0.0, -1.0};

  DaL2Measure ab = zero_measure(fx.lags, fx.anchors);
  for (std::size_t i = 0; i < 3; ++i) ab.atoms[i] = 2.0 * a.atoms[i] + 3.0 * b.atoms[i];
  Chi2Measure lhs = tensor_product(ab, c);
  Chi2Measure t1 = tensor_product(a, c);
  Chi2Measure t2 = tensor_product(b, c);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(lhs.atom_matrix[i][j] ==
            doctest::Approx(2.0 * t1.atom_matrix[i][j] + 3.0 * t2.atom_matrix[i][j]));
}

TEST_CASE("grid mismatch raises") {
  Fixture fx;
  DaL2Measure mu = zero_measure(fx.lags, fx.anchors);
  TimeGrid other_grid = build_grid(1.0, 8);
  LagGrid other = build_lag_grid(1.0, other_grid);
  WindowSlice w = constant_window(other, 1.0);
  CHECK_THROWS_AS(pair_lag(mu, w), std::invalid_argument);
}

TEST_CASE("json round trips") {
  Fixture fx;
  DaL2Measure mu = zero_measure(fx.lags, fx.anchors);
  mu.atoms = {0.5, -1.0, 2.0};
  mu.density.resize(static_cast<std::size_t>(fx.lags.nodes()));
  for (std::size_t j = 0; j < mu.density.size(); ++j) mu.density[j] = 0.1 * double(j);
  DaL2Measure back = measure_from_json(measure_to_json(mu));
  CHECK(back.atoms == mu.atoms);
  CHECK(back.density == mu.density);
  CHECK(back.anchors.lag_steps == mu.anchors.lag_steps);

  Chi2Measure big = tensor_product(mu, mu);
  Chi2Measure back2 = chi2_from_json(chi2_to_json(big));
  CHECK(back2.atom_matrix == big.atom_matrix);
  CHECK(back2.kernel == big.kernel);
  WindowSlice e = constant_window(fx.lags, 1.3);
  CHECK(pair_square(back2, e, e) == doctest::Approx(pair_square(big, e, e)).epsilon(1e-12));
}
