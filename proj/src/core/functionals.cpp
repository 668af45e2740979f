#include "core/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace chivar {

void window_into(const SampledPath& path, int64_t center_step, const LagGrid& lags,
                 WindowSlice& out) {
  out.lag_grid = lags;
  out.values.resize(static_cast<std::size_t>(lags.nodes()));
  for (int64_t j = 0; j <= lags.lags; ++j)
    out.values[static_cast<std::size_t>(j)] = path.at_step(center_step - lags.lags + j);
}

WindowFunctional::WindowFunctional(LagGrid lag_grid, AnchorSet anchors, Eval eval, Deriv deriv,
                                   std::vector<double> breakpoints)
    : lag_grid_(lag_grid),
      anchors_(std::move(anchors)),
      eval_(std::move(eval)),
      deriv_(std::move(deriv)),
      breakpoints_(std::move(breakpoints)) {}

DaL2Measure WindowFunctional::derivative(double t, const WindowSlice& eta) const {
  if (eta.lag_grid.lags != lag_grid_.lags)
    throw std::invalid_argument("WindowFunctional: window on a different lag grid");
  return deriv_(t, eta);
}

namespace {

std::vector<double> anchor_values(const AnchorSet& anchors, const WindowSlice& eta) {
  std::vector<double> v(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i)
    v[i] = eta.at_lag_steps(-anchors.lag_steps[i]);
  return v;
}

DaL2Measure scaled_sum(const DaL2Measure& a, double ca, const DaL2Measure& b, double cb) {
  DaL2Measure out = a;
  for (std::size_t i = 0; i < out.atoms.size(); ++i)
    out.atoms[i] = ca * a.atoms[i] + cb * b.atoms[i];
  if (a.has_density() || b.has_density()) {
    std::size_t n = static_cast<std::size_t>(a.lag_grid.nodes());
    out.density.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double da = a.density.empty() ? 0.0 : a.density[j];
      double db = b.density.empty() ? 0.0 : b.density[j];
      out.density[j] = ca * da + cb * db;
    }
  }
  return out;
}

}  // namespace

WindowFunctional discrete_functional(
    const LagGrid& grid, const AnchorSet& anchors,
    std::function<double(const std::vector<double>&)> f,
    std::function<std::vector<double>(const std::vector<double>&)> grad) {
  AnchorSet a = anchors;
  auto eval = [a, f](double, const WindowSlice& eta) { return f(anchor_values(a, eta)); };
  LagGrid g = grid;
  auto deriv = [g, a, grad](double, const WindowSlice& eta) {
    DaL2Measure mu = zero_measure(g, a);
    mu.atoms = grad(anchor_values(a, eta));
    if (mu.atoms.size() != a.size())
      throw std::invalid_argument("discrete_functional: gradient length mismatch");
    return mu;
  };
  return WindowFunctional(grid, anchors, eval, deriv);
}

WindowFunctional linear_integral_functional(const LagGrid& grid, const AnchorSet& anchors,
                                            std::vector<double> g) {
  if (static_cast<int64_t>(g.size()) != grid.nodes())
    throw std::invalid_argument("linear_integral_functional: density length mismatch");
  double dt = grid.dt;
  auto eval = [g, dt](double, const WindowSlice& eta) {
    std::vector<double> prod(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) prod[j] = g[j] * eta.values[j];
    return trapezoid(prod, dt);
  };
  LagGrid lg = grid;
  AnchorSet a = anchors;
  auto deriv = [lg, a, g](double, const WindowSlice&) {
    DaL2Measure mu = zero_measure(lg, a);
    mu.density = g;
    return mu;
  };
  return WindowFunctional(grid, anchors, eval, deriv);
}

WindowFunctional constant_functional(const LagGrid& grid, const AnchorSet& anchors, double c) {
  LagGrid g = grid;
  AnchorSet a = anchors;
  auto eval = [c](double, const WindowSlice&) { return c; };
  auto deriv = [g, a](double, const WindowSlice&) { return zero_measure(g, a); };
  return WindowFunctional(grid, anchors, eval, deriv);
}

WindowFunctional sum_of(const WindowFunctional& a, const WindowFunctional& b) {
  if (a.anchors().lag_steps != b.anchors().lag_steps)
    throw std::invalid_argument("sum_of: anchor sets differ");
  WindowFunctional fa = a, fb = b;
  auto eval = [fa, fb](double t, const WindowSlice& eta) { return fa(t, eta) + fb(t, eta); };
  auto deriv = [fa, fb](double t, const WindowSlice& eta) {
    return scaled_sum(fa.derivative(t, eta), 1.0, fb.derivative(t, eta), 1.0);
  };
  std::vector<double> bps = a.breakpoints();
  bps.insert(bps.end(), b.breakpoints().begin(), b.breakpoints().end());
  std::sort(bps.begin(), bps.end());
  return WindowFunctional(a.lag_grid(), a.anchors(), eval, deriv, bps);
}

WindowFunctional product_of(const WindowFunctional& a, const WindowFunctional& b) {
  if (a.anchors().lag_steps != b.anchors().lag_steps)
    throw std::invalid_argument("product_of: anchor sets differ");
  WindowFunctional fa = a, fb = b;
  auto eval = [fa, fb](double t, const WindowSlice& eta) { return fa(t, eta) * fb(t, eta); };
  auto deriv = [fa, fb](double t, const WindowSlice& eta) {
    return scaled_sum(fa.derivative(t, eta), fb(t, eta), fb.derivative(t, eta), fa(t, eta));
  };
  std::vector<double> bps = a.breakpoints();
  bps.insert(bps.end(), b.breakpoints().begin(), b.breakpoints().end());
  std::sort(bps.begin(), bps.end());
  return WindowFunctional(a.lag_grid(), a.anchors(), eval, deriv, bps);
}

DaL2Measure derivative_parts(const WindowFunctional& f, double t, const WindowSlice& eta) {
  return f.derivative(t, eta);
}

CovariationCurve predicted_transform_qv(const WindowFunctional& f, const SampledPath& x,
                                        const CovariationCurve& bracket_m,
                                        bool include_zero_atom) {
  if (!(x.grid == bracket_m.grid))
    throw std::invalid_argument("predicted_transform_qv: bracket grid mismatch");
  const auto& anchors = f.anchors();
  CovariationCurve out;
  out.grid = x.grid;
  out.epsilon = bracket_m.epsilon;
  out.values.assign(static_cast<std::size_t>(x.grid.nodes()), 0.0);
  auto bracket_at = [&bracket_m](int64_t m) {
    if (m <= 0) return 0.0;  // [M] extended by 0 below time 0
    if (m >= bracket_m.grid.steps) return bracket_m.values.back();
    return bracket_m.values[static_cast<std::size_t>(m)];
  };
  WindowSlice win;
  double acc = 0.0;
  for (int64_t k = 0; k < x.grid.steps; ++k) {
    window_into(x, k, f.lag_grid(), win);
    DaL2Measure mu = f.derivative(x.grid.node(k), win);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      if (!include_zero_atom && anchors.lag_steps[i] == 0) continue;
      double atom = mu.atoms[i];
      if (atom == 0.0) continue;
      int64_t shift = anchors.lag_steps[i];
      double inc = bracket_at(k + 1 + shift) - bracket_at(k + shift);
      acc += atom * atom * inc;
    }
    out.values[static_cast<std::size_t>(k + 1)] = acc;
  }
  return out;
}

SppReport support_predictability_check(const WindowFunctional& f,
                                       const std::vector<WindowSlice>& states,
                                       const std::vector<double>& schedule,
                                       const TimeGrid& grid, double ratio_cap) {
  if (states.empty()) throw std::invalid_argument("support_predictability_check: no states");
  if (schedule.empty())
    throw std::invalid_argument("support_predictability_check: empty schedule");
  SppReport report;
  report.schedule = schedule;
  for (double eps : schedule) {
    if (snap_to_step(eps, f.lag_grid().dt) < 1)
      throw std::invalid_argument("support_predictability_check: eps not a lag-grid multiple");
    double quantity = 0.0;
    for (int64_t k = 0; k < grid.steps; ++k) {
      double t = grid.node(k);
      double sup_mass = 0.0;
      for (const auto& eta : states)
        sup_mass = std::max(sup_mass, f.derivative(t, eta).near_zero_mass(eps));
      quantity += sup_mass * grid.dt();
    }
    report.quantities.push_back(quantity);
    report.ratios.push_back(quantity / eps);
  }
  report.bounded = true;
  for (double r : report.ratios)
    if (r > ratio_cap) report.bounded = false;
  return report;
}

std::string spp_report_json(const SppReport& report) {
  std::ostringstream out;
  char buf[40];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto list = [&](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s + "]";
  };
  out << "{\"schedule\":" << list(report.schedule) << ",\"quantities\":" << list(report.quantities)
      << ",\"ratios\":" << list(report.ratios)
      << ",\"bounded\":" << (report.bounded ? "true" : "false") << "}";
  return out.str();
}

namespace {

double param_or(const FunctionalSpec& spec, const std::string& key, double fallback,
                bool* found = nullptr) {
  for (const auto& [k, v] : spec.params)
    if (k == key) {
      if (found) *found = true;
      return v;
    }
  if (found) *found = false;
  return fallback;
}

double param_required(const FunctionalSpec& spec, const std::string& key) {
  bool found = false;
  double v = param_or(spec, key, 0.0, &found);
  if (!found)
    throw std::invalid_argument("functional '" + spec.name + "': missing parameter '" + key + "'");
  return v;
}

AnchorSet span_anchors(const LagGrid& grid, std::vector<double> extra) {
  std::vector<double> lags = {-grid.tau, 0.0};
  lags.insert(lags.end(), extra.begin(), extra.end());
  std::sort(lags.begin(), lags.end());
  lags.erase(std::unique(lags.begin(), lags.end(),
                         [&grid](double a, double b) {
                           return std::abs(a - b) < 0.5 * grid.dt;
                         }),
             lags.end());
  return build_anchors(lags, grid);
}

std::size_t anchor_index(const AnchorSet& anchors, const LagGrid& grid, double lag) {
  int64_t s = snap_to_step(lag, grid.dt);
  for (std::size_t i = 0; i < anchors.size(); ++i)
    if (anchors.lag_steps[i] == s) return i;
  throw std::invalid_argument("functional registry: lag not in anchor set");
}

}  // namespace

std::vector<std::string> functional_registry_names() {
  return {"value_at_zero",    "value_at_lag",  "square_at_zero",    "product_zero_lag",
          "smooth_pair",      "integral_constant", "integral_linear", "lag_times_integral"};
}

WindowFunctional make_functional(const FunctionalSpec& spec, const LagGrid& grid) {
  const std::string& name = spec.name;
  if (name == "value_at_zero") {
    AnchorSet a = span_anchors(grid, {});
    std::size_t n = a.size();
    return discrete_functional(
        grid, a, [](const std::vector<double>& v) { return v.back(); },
        [n](const std::vector<double>&) {
          std::vector<double> g(n, 0.0);
          g.back() = 1.0;
          return g;
        });
  }
  if (name == "value_at_lag") {
    double lag = param_required(spec, "lag");
    AnchorSet a = span_anchors(grid, {lag});
    std::size_t idx = anchor_index(a, grid, lag);
    std::size_t n = a.size();
    return discrete_functional(
        grid, a, [idx](const std::vector<double>& v) { return v[idx]; },
        [n, idx](const std::vector<double>&) {
          std::vector<double> g(n, 0.0);
          g[idx] = 1.0;
          return g;
        });
  }
  if (name == "square_at_zero") {
    AnchorSet a = span_anchors(grid, {});
    std::size_t n = a.size();
    return discrete_functional(
        grid, a, [](const std::vector<double>& v) { return v.back() * v.back(); },
        [n](const std::vector<double>& v) {
          std::vector<double> g(n, 0.0);
          g.back() = 2.0 * v.back();
          return g;
        });
  }
  if (name == "product_zero_lag") {
    double lag = param_required(spec, "lag");
    AnchorSet a = span_anchors(grid, {lag});
    std::size_t idx = anchor_index(a, grid, lag);
    std::size_t n = a.size();
    return discrete_functional(
        grid, a, [idx](const std::vector<double>& v) { return v.back() * v[idx]; },
        [n, idx](const std::vector<double>& v) {
          std::vector<double> g(n, 0.0);
          g[idx] = v.back();
          g.back() += v[idx];
          return g;
        });
  }
  if (name == "smooth_pair") {
    double lag = param_required(spec, "lag");
    AnchorSet a = span_anchors(grid, {lag});
    std::size_t idx = anchor_index(a, grid, lag);
    std::size_t n = a.size();
    return discrete_functional(
        grid, a,
        [idx](const std::vector<double>& v) {
          return std::sin(v.back()) + v.back() * std::cos(v[idx]);
        },
        [n, idx](const std::vector<double>& v) {
          std::vector<double> g(n, 0.0);
          g.back() = std::cos(v.back()) + std::cos(v[idx]);
          g[idx] += -v.back() * std::sin(v[idx]);
          return g;
        });
  }
  if (name == "integral_constant") {
    double w = param_or(spec, "weight", 1.0);
    std::vector<double> g(static_cast<std::size_t>(grid.nodes()), w);
    return linear_integral_functional(grid, span_anchors(grid, {}), std::move(g));
  }
  if (name == "integral_linear") {
    double c0 = param_or(spec, "c0", 0.0);
    double c1 = param_or(spec, "c1", 1.0);
    std::vector<double> g(static_cast<std::size_t>(grid.nodes()));
    for (int64_t j = 0; j <= grid.lags; ++j)
      g[static_cast<std::size_t>(j)] = c0 + c1 * grid.node(j);
    return linear_integral_functional(grid, span_anchors(grid, {}), std::move(g));
  }
  if (name == "lag_times_integral") {
    double lag = param_required(spec, "lag");
    double w = param_or(spec, "weight", 1.0);
    AnchorSet a = span_anchors(grid, {lag});
    FunctionalSpec lag_spec{"value_at_lag", {{"lag", lag}}};
    WindowFunctional left = make_functional(lag_spec, grid);
    std::vector<double> g(static_cast<std::size_t>(grid.nodes()), w);
    WindowFunctional right = linear_integral_functional(grid, a, std::move(g));
    return product_of(left, right);
  }
  throw std::invalid_argument("unknown functional '" + name + "'");
}

}  // namespace chivar
