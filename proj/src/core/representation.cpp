#include "core/representation.hpp"

#include <cmath>

#include "core/measures.hpp"
#include "core/parallel.hpp"

namespace chivar {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

std::vector<double> PathPayoff::anchor_values(const SampledPath& gamma) const {
  std::vector<double> v(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) v[i] = value_at(gamma, anchors[i]);
  return v;
}

double PathPayoff::value(const SampledPath& gamma) const {
  if (weighted_increment) {
    // int phi d gamma = phi(T) gamma(T) - int gamma dphi
    std::vector<double> prod(gamma.values.size());
    for (std::size_t k = 0; k < prod.size(); ++k)
      prod[k] = gamma.values[k] * phi_dot(gamma.grid.node(static_cast<int64_t>(k)));
    double integral = phi(gamma.grid.horizon) * gamma.values.back() - trapezoid(prod, gamma.grid.dt());
    return wi_f(integral);
  }
  return f(anchor_values(gamma), gamma);
}

std::vector<MeanStderr> mc_vector_stats(int64_t n, int threads, std::size_t dim,
                                        const std::function<void(int64_t, double*)>& sample) {
  if (n < 2) throw std::invalid_argument("mc_vector_stats: need at least 2 draws");
  constexpr int64_t kBlock = 2048;
  int64_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(blocks),
                                        std::vector<double>(dim, 0.0));
  std::vector<std::vector<double>> sqs(static_cast<std::size_t>(blocks),
                                       std::vector<double>(dim, 0.0));
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    std::vector<double> buf(dim);
    int64_t lo = static_cast<int64_t>(b) * kBlock;
    int64_t hi = std::min(n, lo + kBlock);
    auto& s = sums[b];
    auto& q = sqs[b];
    for (int64_t i = lo; i < hi; ++i) {
      sample(i, buf.data());
      for (std::size_t d = 0; d < dim; ++d) {
        s[d] += buf[d];
        q[d] += buf[d] * buf[d];
      }
    }
  });
  std::vector<MeanStderr> out(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    double s = 0.0, q = 0.0;
    for (int64_t b = 0; b < blocks; ++b) {
      s += sums[static_cast<std::size_t>(b)][d];
      q += sqs[static_cast<std::size_t>(b)][d];
    }
    double mean = s / static_cast<double>(n);
    double var = std::max(0.0, (q - static_cast<double>(n) * mean * mean) /
                                   static_cast<double>(n - 1));
    out[d].mean = mean;
    out[d].se = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

namespace {

void check_state(const TimeGrid& grid, double s, const WindowSlice& eta,
                 const PathPayoff& payoff) {
  if (snap_to_step(s, grid.dt()) < 0 || s > grid.horizon)
    throw std::invalid_argument("representation: s must be a grid node in [0, T]");
  if (eta.lag_grid.lags != grid.steps)
    throw std::invalid_argument("representation: window must span [-T, 0] on the grid");
  for (double a : payoff.anchors)
    if (snap_to_step(a, grid.dt()) < 0)
      throw std::invalid_argument("representation: payoff anchor off the grid");
}

}  // namespace

MCEstimate estimate_u(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                      double s, const WindowSlice& eta, int64_t n, uint64_t seed, int threads) {
  check_state(grid, s, eta, payoff);
  if (n < 2) throw std::invalid_argument("estimate_u: need n >= 2");
  NoiseBatch noise(seed, grid, n);
  auto stats = mc_vector_stats(n, threads, 1, [&](int64_t i, double* out) {
    SampledPath y = simulate_flow(model, s, eta, grid, noise.row(i));
    out[0] = payoff.value(y);
  });
  return MCEstimate{stats[0].mean, stats[0].se, n, seed};
}

MCEstimate estimate_delta0(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                           double s, const WindowSlice& eta, int64_t n, uint64_t seed,
                           int threads) {
  check_state(grid, s, eta, payoff);
  if (payoff.weighted_increment)
    throw std::invalid_argument("estimate_delta0: use malliavin_derivatives for weighted-increment payoffs");
  if (snap_to_step(s, grid.dt()) >= grid.steps)
    throw std::invalid_argument("estimate_delta0: s = T is degenerate");
  if (n < 2) throw std::invalid_argument("estimate_delta0: need n >= 2");
  NoiseBatch noise(seed, grid, n);
  int64_t ks = snap_to_step(s, grid.dt());
  std::vector<int64_t> anchor_steps(payoff.anchors.size());
  for (std::size_t i = 0; i < payoff.anchors.size(); ++i)
    anchor_steps[i] = snap_to_step(payoff.anchors[i], grid.dt());
  double dt = grid.dt();
  auto stats = mc_vector_stats(n, threads, 1, [&](int64_t i, double* out) {
    std::vector<double> row = noise.row(i);
    SampledPath y = simulate_flow(model, s, eta, grid, row);
    VariationExponent ve = variation_exponent(model, y, s, row);
    std::vector<double> vals = payoff.anchor_values(y);
    std::vector<double> grads = payoff.grad_anchors(vals, y);
    double acc = 0.0;
    for (std::size_t a = 0; a < anchor_steps.size(); ++a)
      if (anchor_steps[a] > ks) acc += grads[a] * ve.weight_to(anchor_steps[a]);
    if (payoff.has_density()) {
      std::vector<double> dens = payoff.grad_density(vals, y);
      // trapezoid over [s, T] reusing the one-pass weight accumulation
      double sum = 0.0;
      for (int64_t k = ks; k <= grid.steps; ++k) {
        double w = (k == ks || k == grid.steps) ? 0.5 : 1.0;
        sum += w * dens[static_cast<std::size_t>(k)] * ve.weight_to(k);
      }
      acc += sum * dt;
    }
    out[0] = acc;
  });
  return MCEstimate{stats[0].mean, stats[0].se, n, seed};
}

double LagDerivative::pair(const WindowSlice& h) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    int64_t back = snap_to_step(-atom_lags[i], lag_grid.dt);
    acc += atoms[i] * h.at_lag_steps(back);
  }
  if (!density.empty()) {
    std::vector<double> prod(density.size());
    for (std::size_t j = 0; j < density.size(); ++j) prod[j] = density[j] * h.values[j];
    acc += trapezoid(prod, lag_grid.dt);
  }
  return acc;
}

double LagDerivative::pair_stderr(const WindowSlice& h) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    int64_t back = snap_to_step(-atom_lags[i], lag_grid.dt);
    acc += atom_stderr[i] * std::abs(h.at_lag_steps(back));
  }
  if (!density_stderr.empty()) {
    std::vector<double> prod(density_stderr.size());
    for (std::size_t j = 0; j < prod.size(); ++j)
      prod[j] = density_stderr[j] * std::abs(h.values[j]);
    acc += trapezoid(prod, lag_grid.dt);
  }
  return acc;
}

LagDerivative estimate_perp(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                            double s, const WindowSlice& eta, int64_t n, uint64_t seed,
                            int threads) {
  check_state(grid, s, eta, payoff);
  if (payoff.weighted_increment)
    throw std::invalid_argument("estimate_perp: use malliavin_derivatives for weighted-increment payoffs");
  if (snap_to_step(s, grid.dt()) >= grid.steps)
    throw std::invalid_argument("estimate_perp: s = T is degenerate");
  if (n < 2) throw std::invalid_argument("estimate_perp: need n >= 2");
  int64_t ks = snap_to_step(s, grid.dt());
  std::vector<std::size_t> frozen;  // payoff anchor indices with a_i < s
  std::vector<int64_t> anchor_steps(payoff.anchors.size());
  for (std::size_t i = 0; i < payoff.anchors.size(); ++i) {
    anchor_steps[i] = snap_to_step(payoff.anchors[i], grid.dt());
    if (anchor_steps[i] < ks) frozen.push_back(i);
  }
  const int64_t L = grid.steps;  // lag grid spans [-T, 0]
  const bool density = payoff.has_density();
  std::size_t dim = frozen.size() + (density ? static_cast<std::size_t>(L + 1) : 0);
  NoiseBatch noise(seed, grid, n);
  std::vector<MeanStderr> stats;
  if (dim > 0) {
    stats = mc_vector_stats(n, threads, dim, [&](int64_t i, double* out) {
      std::vector<double> row = noise.row(i);
      SampledPath y = simulate_flow(model, s, eta, grid, row);
      std::vector<double> vals = payoff.anchor_values(y);
      std::vector<double> grads = payoff.grad_anchors(vals, y);
      std::size_t slot = 0;
      for (std::size_t idx : frozen) out[slot++] = grads[idx];
      if (density) {
        std::vector<double> dens = payoff.grad_density(vals, y);
        // lag node j holds rho = s + y_j; density lives on [-s, 0)
        for (int64_t j = 0; j <= L; ++j) {
          int64_t k = ks - (L - j);
          out[slot++] = (k >= 0 && j < L) ? dens[static_cast<std::size_t>(k)] : 0.0;
        }
      }
    });
  }
  LagDerivative out;
  out.lag_grid = LagGrid{grid.horizon, grid.steps, grid.dt()};
  std::size_t slot = 0;
  for (std::size_t idx : frozen) {
    out.atom_lags.push_back(payoff.anchors[idx] - s);
    out.atoms.push_back(stats[slot].mean);
    out.atom_stderr.push_back(stats[slot].se);
    ++slot;
  }
  if (density) {
    out.density.resize(static_cast<std::size_t>(L + 1));
    out.density_stderr.resize(static_cast<std::size_t>(L + 1));
    for (int64_t j = 0; j <= L; ++j, ++slot) {
      out.density[static_cast<std::size_t>(j)] = stats[slot].mean;
      out.density_stderr[static_cast<std::size_t>(j)] = stats[slot].se;
    }
  }
  return out;
}

HedgeResult replicate(const PathPayoff& payoff, const SdeModel& model, const TimeGrid& grid,
                      const WindowSlice& eta0, uint64_t scenario_seed, int64_t scenario_index,
                      int64_t rebalance_stride, int64_t inner_n, uint64_t seed, int threads) {
  if (payoff.weighted_increment)
    throw std::invalid_argument("replicate: weighted-increment payoffs not supported");
  if (rebalance_stride < 1 || grid.steps % rebalance_stride != 0)
    throw std::invalid_argument("replicate: rebalance stride must divide the step count");
  for (double a : payoff.anchors) {
    int64_t st = snap_to_step(a, grid.dt());
    if (st < 0 || st % rebalance_stride != 0)
      throw std::invalid_argument("replicate: rebalance grid must contain every payoff anchor");
  }
  NoiseBatch outer(scenario_seed, grid, scenario_index + 1);
  std::vector<double> row = outer.row(scenario_index);
  SampledPath x = simulate_flow(model, 0.0, eta0, grid, row);

  HedgeResult result;
  MCEstimate h0 = estimate_u(payoff, model, grid, 0.0, eta0, inner_n, mix_seed(seed, 0), threads);
  result.initial_value = h0.value;
  result.initial_stderr = h0.stderr_;

  double gains = 0.0;
  int64_t n_reb = grid.steps / rebalance_stride;
  WindowSlice win;
  LagGrid lag{grid.horizon, grid.steps, grid.dt()};
  for (int64_t r = 0; r < n_reb; ++r) {
    int64_t k0 = r * rebalance_stride;
    double sr = grid.node(k0);
    window_into(x, k0, lag, win);
    MCEstimate delta = estimate_delta0(payoff, model, grid, sr, win, inner_n,
                                       mix_seed(seed, static_cast<uint64_t>(r + 1)), threads);
    result.rebalance_times.push_back(sr);
    result.strategy.push_back(delta.value);
    result.strategy_stderr.push_back(delta.stderr_);
    for (int64_t k = k0; k < k0 + rebalance_stride; ++k) {
      double t = grid.node(k);
      double xv = x.values[static_cast<std::size_t>(k)];
      gains += delta.value * model.sigma(t, xv) * row[static_cast<std::size_t>(k)];
    }
  }
  result.terminal_payoff = payoff.value(x);
  result.replication_error = result.terminal_payoff - result.initial_value - gains;
  return result;
}

MalliavinDerivatives malliavin_derivatives(const PathPayoff& payoff, const SdeModel& model,
                                           const TimeGrid& grid, double s, const WindowSlice& eta,
                                           int64_t n, uint64_t seed, int threads) {
  if (!payoff.weighted_increment)
    throw std::invalid_argument("malliavin_derivatives: payoff must be of weighted-increment kind");
  if (model.name != "wiener")
    throw std::invalid_argument("malliavin_derivatives: Brownian dynamics (sigma = 1, b = 0) required");
  check_state(grid, s, eta, payoff);
  int64_t ks = snap_to_step(s, grid.dt());
  if (ks >= grid.steps) throw degenerate_error("malliavin_derivatives: s = T");
  // int_s^T phi^2 by trapezoid on grid nodes
  std::vector<double> phi2;
  phi2.reserve(static_cast<std::size_t>(grid.steps - ks + 1));
  for (int64_t k = ks; k <= grid.steps; ++k) {
    double p = payoff.phi(grid.node(k));
    phi2.push_back(p * p);
  }
  double denom = trapezoid(phi2, grid.dt());
  if (!(denom > 1e-14)) throw degenerate_error("malliavin_derivatives: vanishing int phi^2");

  NoiseBatch noise(seed, grid, n);
  auto stats = mc_vector_stats(n, threads, 1, [&](int64_t i, double* out) {
    std::vector<double> row = noise.row(i);
    SampledPath y = simulate_flow(model, s, eta, grid, row);
    double phival = payoff.value(y);
    double stoch = 0.0;  // int_0^T phi dW, left-point on the driving noise
    for (int64_t k = 0; k < grid.steps; ++k)
      stoch += payoff.phi(grid.node(k)) * row[static_cast<std::size_t>(k)];
    out[0] = phival * stoch;
  });
  double e = stats[0].mean, se = stats[0].se;

  MalliavinDerivatives out;
  out.delta0 = MCEstimate{payoff.phi(s) / denom * e, std::abs(payoff.phi(s)) / denom * se, n, seed};
  out.perp.lag_grid = LagGrid{grid.horizon, grid.steps, grid.dt()};
  if (ks > 0) {
    out.perp.atom_lags.push_back(-s);
    out.perp.atoms.push_back(-payoff.phi(0.0) * e / denom);
    out.perp.atom_stderr.push_back(std::abs(payoff.phi(0.0)) * se / denom);
    const int64_t L = grid.steps;
    out.perp.density.assign(static_cast<std::size_t>(L + 1), 0.0);
    out.perp.density_stderr.assign(static_cast<std::size_t>(L + 1), 0.0);
    for (int64_t j = 0; j <= L; ++j) {
      int64_t k = ks - (L - j);
      if (k >= 0 && j < L) {
        double pd = payoff.phi_dot(grid.node(k));
        out.perp.density[static_cast<std::size_t>(j)] = -pd * e / denom;
        out.perp.density_stderr[static_cast<std::size_t>(j)] = std::abs(pd) * se / denom;
      }
    }
  }
  return out;
}

namespace {

double payoff_param(const PayoffSpec& spec, const std::string& key, double fallback,
                    bool* found = nullptr) {
  for (const auto& [k, v] : spec.params)
    if (k == key) {
      if (found) *found = true;
      return v;
    }
  if (found) *found = false;
  return fallback;
}

double payoff_param_required(const PayoffSpec& spec, const std::string& key) {
  bool found = false;
  double v = payoff_param(spec, key, 0.0, &found);
  if (!found)
    throw std::invalid_argument("payoff '" + spec.name + "': missing parameter '" + key + "'");
  return v;
}

double smoothed_call(double x, double strike, double width) {
  double d = x - strike;
  if (width <= 0.0) return std::max(d, 0.0);
  double z = d / width;
  return d * normal_cdf(z) + width * 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

double smoothed_call_grad(double x, double strike, double width) {
  double d = x - strike;
  if (width <= 0.0) return d >= 0.0 ? 1.0 : 0.0;
  return normal_cdf(d / width);
}

}  // namespace

std::vector<std::string> payoff_registry_names() {
  return {"terminal_linear", "terminal_square",        "call_smoothed",
          "product_two",     "integral_mean",          "terminal_plus_integral",
          "wi_identity",     "wi_indicator",           "wi_smoothed_step"};
}

PathPayoff make_payoff(const PayoffSpec& spec, double horizon) {
  PathPayoff p;
  p.name = spec.name;
  const std::string& name = spec.name;
  if (name == "terminal_linear") {
    p.anchors = {horizon};
    p.f = [](const std::vector<double>& v, const SampledPath&) { return v[0]; };
    p.grad_anchors = [](const std::vector<double>&, const SampledPath&) {
      return std::vector<double>{1.0};
    };
    return p;
  }
  if (name == "terminal_square") {
    p.anchors = {horizon};
    p.f = [](const std::vector<double>& v, const SampledPath&) { return v[0] * v[0]; };
    p.grad_anchors = [](const std::vector<double>& v, const SampledPath&) {
      return std::vector<double>{2.0 * v[0]};
    };
    return p;
  }
  if (name == "call_smoothed") {
    double strike = payoff_param(spec, "strike", 1.0);
    double width = payoff_param(spec, "width", 0.01);
    p.anchors = {horizon};
    p.f = [strike, width](const std::vector<double>& v, const SampledPath&) {
      return smoothed_call(v[0], strike, width);
    };
    p.grad_anchors = [strike, width](const std::vector<double>& v, const SampledPath&) {
      return std::vector<double>{smoothed_call_grad(v[0], strike, width)};
    };
    return p;
  }
  if (name == "product_two") {
    double a1 = payoff_param_required(spec, "a1");
    p.anchors = {a1, horizon};
    p.f = [](const std::vector<double>& v, const SampledPath&) { return v[0] * v[1]; };
    p.grad_anchors = [](const std::vector<double>& v, const SampledPath&) {
      return std::vector<double>{v[1], v[0]};
    };
    return p;
  }
  if (name == "integral_mean") {
    p.anchors = {horizon};
    p.f = [](const std::vector<double>&, const SampledPath& g) {
      return trapezoid(g.values, g.grid.dt());
    };
    p.grad_anchors = [](const std::vector<double>&, const SampledPath&) {
      return std::vector<double>{0.0};
    };
    p.grad_density = [](const std::vector<double>&, const SampledPath& g) {
      return std::vector<double>(g.values.size(), 1.0);
    };
    return p;
  }
  if (name == "terminal_plus_integral") {
    double beta = payoff_param(spec, "beta", 1.0);
    p.anchors = {horizon};
    p.f = [beta](const std::vector<double>& v, const SampledPath& g) {
      return v[0] + beta * trapezoid(g.values, g.grid.dt());
    };
    p.grad_anchors = [](const std::vector<double>&, const SampledPath&) {
      return std::vector<double>{1.0};
    };
    p.grad_density = [beta](const std::vector<double>&, const SampledPath& g) {
      return std::vector<double>(g.values.size(), beta);
    };
    return p;
  }
  if (name == "wi_identity" || name == "wi_indicator" || name == "wi_smoothed_step") {
    double c0 = payoff_param(spec, "phi_c0", 1.0);
    double c1 = payoff_param(spec, "phi_c1", 0.0);
    if (std::abs(c0 + c1 * horizon) < 1e-12)
      throw std::invalid_argument("weighted-increment payoff: phi(T) must not vanish");
    p.weighted_increment = true;
    p.anchors = {horizon};
    p.phi = [c0, c1](double t) { return c0 + c1 * t; };
    p.phi_dot = [c1](double) { return c1; };
    if (name == "wi_identity") {
      p.wi_f = [](double x) { return x; };
    } else if (name == "wi_indicator") {
      p.wi_f = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
    } else {
      double width = payoff_param(spec, "width", 0.05);
      p.wi_f = [width](double x) { return normal_cdf(x / width); };
    }
    return p;
  }
  throw std::invalid_argument("unknown payoff '" + name + "'");
}

}  // namespace chivar
