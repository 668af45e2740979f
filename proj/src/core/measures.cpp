#include "core/measures.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace chivar {

namespace {

void check_lag_match(const LagGrid& a, const LagGrid& b, const char* who) {
  if (a.lags != b.lags || std::abs(a.tau - b.tau) > 1e-12 * std::max(1.0, a.tau))
    throw std::invalid_argument(std::string(who) + ": lag grid mismatch");
}

bool any_nonzero(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return true;
  return false;
}

}  // namespace

double trapezoid(const std::vector<double>& f, double dt) {
  if (f.size() < 2) return 0.0;
  double acc = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) acc += f[i];
  return acc * dt;
}

bool DaL2Measure::has_density() const { return any_nonzero(density); }

DaL2Measure DaL2Measure::perp() const {
  DaL2Measure p = *this;
  p.atoms.back() = 0.0;
  return p;
}

double DaL2Measure::near_zero_mass(double eps) const {
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < anchors.size(); ++i) {
    double lag = anchors.lags[i];
    if (lag >= -eps && lag < 0.0) mass += std::abs(atoms[i]);
  }
  if (!density.empty()) {
    int64_t k = snap_to_step(eps, lag_grid.dt);
    if (k < 0) throw std::invalid_argument("near_zero_mass: eps not a lag-grid multiple");
    k = std::min<int64_t>(k, lag_grid.lags);
    std::vector<double> tail;
    tail.reserve(static_cast<std::size_t>(k + 1));
    for (int64_t j = lag_grid.lags - k; j <= lag_grid.lags; ++j)
      tail.push_back(std::abs(density[static_cast<std::size_t>(j)]));
    mass += trapezoid(tail, lag_grid.dt);
  }
  return mass;
}

DaL2Measure zero_measure(const LagGrid& grid, const AnchorSet& anchors) {
  DaL2Measure mu;
  mu.lag_grid = grid;
  mu.anchors = anchors;
  mu.atoms.assign(anchors.size(), 0.0);
  return mu;
}

bool Chi2Measure::has_atoms() const {
  for (const auto& row : atom_matrix)
    if (any_nonzero(row)) return true;
  return false;
}

bool Chi2Measure::has_left_mixed(std::size_t i) const {
  return i < left_mixed.size() && any_nonzero(left_mixed[i]);
}

bool Chi2Measure::has_right_mixed(std::size_t i) const {
  return i < right_mixed.size() && any_nonzero(right_mixed[i]);
}

bool Chi2Measure::has_kernel() const {
  for (const auto& row : kernel)
    if (any_nonzero(row)) return true;
  return false;
}

double Chi2Measure::atom_l1() const {
  double s = 0.0;
  for (const auto& row : atom_matrix)
    for (double v : row) s += std::abs(v);
  return s;
}

Chi2Measure zero_chi2(const LagGrid& grid, const AnchorSet& anchors) {
  Chi2Measure mu;
  mu.lag_grid = grid;
  mu.anchors = anchors;
  mu.atom_matrix.assign(anchors.size(), std::vector<double>(anchors.size(), 0.0));
  mu.left_mixed.assign(anchors.size(), {});
  mu.right_mixed.assign(anchors.size(), {});
  return mu;
}

double pair_lag(const DaL2Measure& mu, const WindowSlice& eta) {
  check_lag_match(mu.lag_grid, eta.lag_grid, "pair_lag");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.anchors.size(); ++i)
    acc += mu.atoms[i] * eta.at_lag_steps(-mu.anchors.lag_steps[i]);
  if (!mu.density.empty()) {
    std::vector<double> prod(mu.density.size());
    for (std::size_t j = 0; j < prod.size(); ++j) prod[j] = mu.density[j] * eta.values[j];
    acc += trapezoid(prod, mu.lag_grid.dt);
  }
  return acc;
}

double pair_square(const Chi2Measure& mu2, const WindowSlice& eta1, const WindowSlice& eta2) {
  check_lag_match(mu2.lag_grid, eta1.lag_grid, "pair_square");
  check_lag_match(mu2.lag_grid, eta2.lag_grid, "pair_square");
  const std::size_t n = mu2.anchors.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e1 = eta1.at_lag_steps(-mu2.anchors.lag_steps[i]);
    for (std::size_t j = 0; j < n; ++j) {
      double lam = mu2.atom_matrix[i][j];
      if (lam != 0.0) acc += lam * e1 * eta2.at_lag_steps(-mu2.anchors.lag_steps[j]);
    }
  }
  std::vector<double> prod(static_cast<std::size_t>(mu2.lag_grid.nodes()));
  for (std::size_t i = 0; i < n; ++i) {
    if (mu2.has_left_mixed(i)) {
      for (std::size_t j = 0; j < prod.size(); ++j)
        prod[j] = mu2.left_mixed[i][j] * eta1.values[j];
      acc += trapezoid(prod, mu2.lag_grid.dt) * eta2.at_lag_steps(-mu2.anchors.lag_steps[i]);
    }
    if (mu2.has_right_mixed(i)) {
      for (std::size_t j = 0; j < prod.size(); ++j)
        prod[j] = mu2.right_mixed[i][j] * eta2.values[j];
      acc += eta1.at_lag_steps(-mu2.anchors.lag_steps[i]) * trapezoid(prod, mu2.lag_grid.dt);
    }
  }
  if (!mu2.kernel.empty()) {
    // Nested trapezoid: inner integral over y for each x, outer over x.
    for (std::size_t jx = 0; jx < prod.size(); ++jx) {
      const auto& row = mu2.kernel[jx];
      std::vector<double> inner(prod.size());
      for (std::size_t jy = 0; jy < prod.size(); ++jy) inner[jy] = row[jy] * eta2.values[jy];
      prod[jx] = trapezoid(inner, mu2.lag_grid.dt) * eta1.values[jx];
    }
    acc += trapezoid(prod, mu2.lag_grid.dt);
  }
  return acc;
}

Chi2Measure tensor_product(const DaL2Measure& a, const DaL2Measure& b) {
  check_lag_match(a.lag_grid, b.lag_grid, "tensor_product");
  if (a.anchors.lag_steps != b.anchors.lag_steps)
    throw std::invalid_argument("tensor_product: anchor sets differ");
  const std::size_t n = a.anchors.size();
  Chi2Measure out = zero_chi2(a.lag_grid, a.anchors);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.atom_matrix[i][j] = a.atoms[i] * b.atoms[j];
  if (a.has_density()) {
    for (std::size_t j = 0; j < n; ++j) {
      if (b.atoms[j] == 0.0) continue;
      out.left_mixed[j].resize(a.density.size());
      for (std::size_t k = 0; k < a.density.size(); ++k)
        out.left_mixed[j][k] = a.density[k] * b.atoms[j];
    }
  }
  if (b.has_density()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (a.atoms[i] == 0.0) continue;
      out.right_mixed[i].resize(b.density.size());
      for (std::size_t k = 0; k < b.density.size(); ++k)
        out.right_mixed[i][k] = a.atoms[i] * b.density[k];
    }
  }
  if (a.has_density() && b.has_density()) {
    out.kernel.assign(a.density.size(), std::vector<double>(b.density.size()));
    for (std::size_t x = 0; x < a.density.size(); ++x)
      for (std::size_t y = 0; y < b.density.size(); ++y)
        out.kernel[x][y] = a.density[x] * b.density[y];
  }
  return out;
}

namespace {

LagGrid lag_grid_from_anchors(const std::vector<double>& anchors, std::size_t density_nodes) {
  double tau = -anchors.front();
  int64_t lags = static_cast<int64_t>(density_nodes) - 1;
  if (lags < 1) throw std::invalid_argument("measure json: density too short");
  return LagGrid{tau, lags, tau / static_cast<double>(lags)};
}

AnchorSet anchors_on(const std::vector<double>& lags, const LagGrid& grid) {
  return build_anchors(lags, grid);
}

}  // namespace

std::string measure_to_json(const DaL2Measure& mu) {
  nlohmann::json j;
  j["anchors"] = mu.anchors.lags;
  j["atoms"] = mu.atoms;
  j["density"] =
      mu.density.empty() ? std::vector<double>(static_cast<std::size_t>(mu.lag_grid.nodes()), 0.0)
                         : mu.density;
  return j.dump();
}

DaL2Measure measure_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  auto anchors = j.at("anchors").get<std::vector<double>>();
  auto atoms = j.at("atoms").get<std::vector<double>>();
  auto density = j.at("density").get<std::vector<double>>();
  LagGrid grid = lag_grid_from_anchors(anchors, density.size());
  DaL2Measure mu;
  mu.lag_grid = grid;
  mu.anchors = anchors_on(anchors, grid);
  if (atoms.size() != mu.anchors.size())
    throw std::invalid_argument("measure json: atoms/anchors length mismatch");
  mu.atoms = atoms;
  mu.density = density;
  return mu;
}

std::string chi2_to_json(const Chi2Measure& mu) {
  nlohmann::json j;
  j["anchors"] = mu.anchors.lags;
  j["atom_matrix"] = mu.atom_matrix;
  auto dense = [&mu](const std::vector<std::vector<double>>& fam) {
    std::vector<std::vector<double>> out(fam.size());
    for (std::size_t i = 0; i < fam.size(); ++i)
      out[i] = fam[i].empty()
                   ? std::vector<double>(static_cast<std::size_t>(mu.lag_grid.nodes()), 0.0)
                   : fam[i];
    return out;
  };
  j["left_mixed"] = dense(mu.left_mixed);
  j["right_mixed"] = dense(mu.right_mixed);
  j["kernel"] = mu.kernel;
  return j.dump();
}

Chi2Measure chi2_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  auto anchors = j.at("anchors").get<std::vector<double>>();
  auto left = j.at("left_mixed").get<std::vector<std::vector<double>>>();
  if (left.empty() || left.front().empty())
    throw std::invalid_argument("chi2 json: left_mixed must carry the lag grid shape");
  LagGrid grid = lag_grid_from_anchors(anchors, left.front().size());
  Chi2Measure mu = zero_chi2(grid, anchors_on(anchors, grid));
  mu.atom_matrix = j.at("atom_matrix").get<std::vector<std::vector<double>>>();
  mu.left_mixed = left;
  mu.right_mixed = j.at("right_mixed").get<std::vector<std::vector<double>>>();
  mu.kernel = j.at("kernel").get<std::vector<std::vector<double>>>();
  if (mu.atom_matrix.size() != mu.anchors.size())
    throw std::invalid_argument("chi2 json: atom matrix shape mismatch");
  return mu;
}

}  // namespace chivar
