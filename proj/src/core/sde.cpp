#include "core/sde.hpp"

#include <cmath>
#include <stdexcept>

namespace chivar {

namespace {

double param_or(const ModelSpec& spec, const std::string& key, double fallback) {
  for (const auto& [k, v] : spec.params)
    if (k == key) return v;
  return fallback;
}

}  // namespace

std::vector<std::string> model_registry_names() {
  return {"wiener", "constant", "affine", "degenerate", "sinusoidal"};
}

SdeModel make_model(const ModelSpec& spec) {
  SdeModel m;
  m.name = spec.name;
  double beta = param_or(spec, "beta", 0.0);
  m.drift = [beta](double, double x) { return beta * x; };
  m.db_dx = [beta](double, double) { return beta; };
  if (spec.name == "wiener") {
    m.sigma = [](double, double) { return 1.0; };
    m.dsigma_dx = [](double, double) { return 0.0; };
    return m;
  }
  if (spec.name == "constant") {
    double s = param_or(spec, "sigma", 1.0);
    m.sigma = [s](double, double) { return s; };
    m.dsigma_dx = [](double, double) { return 0.0; };
    return m;
  }
  if (spec.name == "affine") {
    double s = param_or(spec, "sigma", 0.2);
    m.sigma = [s](double, double x) { return s * x; };
    m.dsigma_dx = [s](double, double) { return s; };
    return m;
  }
  if (spec.name == "degenerate") {
    double s = param_or(spec, "sigma", 0.2);
    m.sigma = [s](double, double x) { return s * std::max(x, 0.0); };
    m.dsigma_dx = [s](double, double x) { return x > 0.0 ? s : 0.0; };
    return m;
  }
  if (spec.name == "sinusoidal") {
    double s0 = param_or(spec, "sigma0", 0.3);
    double s1 = param_or(spec, "sigma1", 0.1);
    m.sigma = [s0, s1](double, double x) { return s0 + s1 * std::sin(x); };
    m.dsigma_dx = [s1](double, double x) { return s1 * std::cos(x); };
    return m;
  }
  throw std::invalid_argument("unknown model '" + spec.name + "'");
}

NoiseBatch::NoiseBatch(uint64_t s, const TimeGrid& g, int64_t n)
    : seed(s), grid(g), n_paths(n), sqrt_dt_(std::sqrt(g.dt())) {}

std::vector<double> NoiseBatch::row(int64_t path) const {
  std::vector<double> v(static_cast<std::size_t>(grid.steps));
  for (int64_t k = 0; k < grid.steps; ++k) v[static_cast<std::size_t>(k)] = increment(path, k);
  return v;
}

SampledPath simulate_flow(const SdeModel& model, double s, const WindowSlice& eta,
                          const TimeGrid& grid, const std::vector<double>& noise) {
  int64_t ks = snap_to_step(s, grid.dt());
  if (ks < 0 || ks > grid.steps) throw std::invalid_argument("simulate_flow: s must be a grid node");
  if (eta.lag_grid.lags < ks)
    throw std::invalid_argument("simulate_flow: window too short to cover [0, s]");
  if (static_cast<int64_t>(noise.size()) < grid.steps)
    throw std::invalid_argument("simulate_flow: need one increment per step");
  std::vector<double> v(static_cast<std::size_t>(grid.nodes()));
  for (int64_t k = 0; k <= ks; ++k)
    v[static_cast<std::size_t>(k)] = eta.at_lag_steps(ks - k);
  double dt = grid.dt();
  for (int64_t k = ks; k < grid.steps; ++k) {
    double t = grid.node(k);
    double y = v[static_cast<std::size_t>(k)];
    v[static_cast<std::size_t>(k + 1)] =
        y + model.sigma(t, y) * noise[static_cast<std::size_t>(k)] + model.drift(t, y) * dt;
  }
  return SampledPath(grid, std::move(v));
}

VariationExponent variation_exponent(const SdeModel& model, const SampledPath& y, double s,
                                     const std::vector<double>& noise) {
  int64_t ks = snap_to_step(s, y.grid.dt());
  if (ks < 0 || ks > y.grid.steps)
    throw std::invalid_argument("variation_exponent: s must be a grid node");
  VariationExponent out;
  out.log_weights.assign(static_cast<std::size_t>(y.grid.nodes()), 0.0);
  double dt = y.grid.dt();
  double acc = 0.0;
  for (int64_t k = ks; k < y.grid.steps; ++k) {
    double t = y.grid.node(k);
    double yv = y.values[static_cast<std::size_t>(k)];
    double ds = model.dsigma_dx(t, yv);
    acc += ds * noise[static_cast<std::size_t>(k)] + (model.db_dx(t, yv) - 0.5 * ds * ds) * dt;
    out.log_weights[static_cast<std::size_t>(k + 1)] = acc;
  }
  return out;
}

double variation_weight(const SdeModel& model, const SampledPath& y, double s, double rho,
                        const std::vector<double>& noise) {
  int64_t kr = snap_to_step(rho, y.grid.dt());
  int64_t ks = snap_to_step(s, y.grid.dt());
  if (ks < 0 || kr < 0) throw std::invalid_argument("variation_weight: off-grid time");
  if (kr < ks) throw std::invalid_argument("variation_weight: rho < s");
  return variation_exponent(model, y, s, noise).weight_to(kr);
}

}  // namespace chivar
