#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/grid.hpp"
#include "core/rng.hpp"

namespace chivar {

// Coefficients of dX = sigma(t,X) dW + b(t,X) dt with the x-derivatives the
// first-variation weight needs. d2sigma_dx2 is optional (only finite
// difference schemes ask for curvature, and they take it from the PDE
// solution, not from here).
struct SdeModel {
  std::string name;
  std::function<double(double, double)> sigma;
  std::function<double(double, double)> drift;
  std::function<double(double, double)> dsigma_dx;
  std::function<double(double, double)> db_dx;
};

struct ModelSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> params;
};

// Registry: "wiener" (sigma 1, b 0), "constant" {sigma}, "affine" {sigma}
// (sigma*x), "degenerate" {sigma} (sigma*max(x,0)), "sinusoidal"
// {sigma0, sigma1}. Optional param "beta" adds drift b = beta*x.
std::vector<std::string> model_registry_names();
SdeModel make_model(const ModelSpec& spec);

// Gaussian driving increments, one row per path, one column per grid step,
// every entry reproducible from (seed, path, step) alone.
struct NoiseBatch {
  uint64_t seed = 0;
  TimeGrid grid;
  int64_t n_paths = 0;

  // Increment scaled by sqrt(dt), i.e. distributed N(0, dt).
  double increment(int64_t path, int64_t step) const {
    return sqrt_dt_ * normal_draw(seed, static_cast<uint64_t>(path), static_cast<uint64_t>(step));
  }
  std::vector<double> row(int64_t path) const;

  NoiseBatch() = default;
  NoiseBatch(uint64_t s, const TimeGrid& g, int64_t n);

 private:
  double sqrt_dt_ = 0.0;
};

// Flow restarted at grid node s from the past window eta (lag grid spanning
// [-T, 0]): frozen history up to s, Euler-Maruyama after. `noise` must hold
// one increment per grid step, indexed by absolute step.
SampledPath simulate_flow(const SdeModel& model, double s, const WindowSlice& eta,
                          const TimeGrid& grid, const std::vector<double>& noise);

// Log of the first-variation weight, accumulated step by step alongside a
// flow path: log E(s -> t) with
// E = exp{int dsigma_dx dW - 1/2 int (dsigma_dx)^2 dxi + int db_dx dxi}.
struct VariationExponent {
  // log_weights[k] = log E(s -> t_k) for t_k >= s (0 before s).
  std::vector<double> log_weights;
  double weight_to(int64_t step) const { return std::exp(log_weights[static_cast<std::size_t>(step)]); }
};

VariationExponent variation_exponent(const SdeModel& model, const SampledPath& y, double s,
                                     const std::vector<double>& noise);

// Doleans weight E(s -> rho) for grid nodes s <= rho, computed from the flow
// path generated with the same noise row.
double variation_weight(const SdeModel& model, const SampledPath& y, double s, double rho,
                        const std::vector<double>& noise);

}  // namespace chivar
