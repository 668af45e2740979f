#include "core/pde_chain.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace chivar {

namespace {

// Tridiagonal solve for the interior unknowns v_1..v_{J-1} with the zero-
// curvature closure v_0 = 2v_1 - v_2, v_J = 2v_{J-1} - v_{J-2} substituted
// into the first and last equations.
void solve_interior(std::vector<double>& sub, std::vector<double>& diag, std::vector<double>& sup,
                    std::vector<double>& rhs) {
  std::size_t m = diag.size();
  for (std::size_t r = 1; r < m; ++r) {
    double w = sub[r] / diag[r - 1];
    diag[r] -= w * sup[r - 1];
    rhs[r] -= w * rhs[r - 1];
  }
  rhs[m - 1] /= diag[m - 1];
  for (std::size_t r = m - 1; r-- > 0;) rhs[r] = (rhs[r] - sup[r] * rhs[r + 1]) / diag[r];
}

struct Stepper {
  const SdeModel* model;
  const LatticeSpec* space;
  double h;

  // One backward step from the slice at time t_new + k to time t_new.
  void step(std::vector<double>& v, double t_new, double t_old, double k, double theta) const {
    const int64_t J = space->count - 1;
    const std::size_t m = static_cast<std::size_t>(J - 1);  // interior unknowns
    std::vector<double> sub(m), diag(m), sup(m), rhs(m);
    for (int64_t j = 1; j < J; ++j) {
      double y = space->node(j);
      double s2_new = model->sigma(t_new, y);
      s2_new *= s2_new;
      double b_new = model->drift(t_new, y);
      double a_new = 0.5 * s2_new / (h * h) - 0.5 * b_new / h;
      double c_new = 0.5 * s2_new / (h * h) + 0.5 * b_new / h;
      double d_new = -(a_new + c_new);

      double s2_old = model->sigma(t_old, y);
      s2_old *= s2_old;
      double b_old = model->drift(t_old, y);
      double a_old = 0.5 * s2_old / (h * h) - 0.5 * b_old / h;
      double c_old = 0.5 * s2_old / (h * h) + 0.5 * b_old / h;
      double d_old = -(a_old + c_old);

      std::size_t r = static_cast<std::size_t>(j - 1);
      sub[r] = -theta * k * a_new;
      diag[r] = 1.0 - theta * k * d_new;
      sup[r] = -theta * k * c_new;
      double explicit_part = (1.0 - theta) * k *
                             (a_old * v[static_cast<std::size_t>(j - 1)] +
                              d_old * v[static_cast<std::size_t>(j)] +
                              c_old * v[static_cast<std::size_t>(j + 1)]);
      rhs[r] = v[static_cast<std::size_t>(j)] + explicit_part;
    }
    // Fold the curvature-free boundary closure into the end rows.
    diag[0] += 2.0 * sub[0];
    sup[0] -= sub[0];
    diag[m - 1] += 2.0 * sup[m - 1];
    sub[m - 1] -= sup[m - 1];
    solve_interior(sub, diag, sup, rhs);
    for (int64_t j = 1; j < J; ++j) v[static_cast<std::size_t>(j)] = rhs[static_cast<std::size_t>(j - 1)];
    v[0] = 2.0 * v[1] - v[2];
    v[static_cast<std::size_t>(J)] =
        2.0 * v[static_cast<std::size_t>(J - 1)] - v[static_cast<std::size_t>(J - 2)];
  }
};

int64_t ipow(int64_t base, int64_t exp) {
  int64_t r = 1;
  for (int64_t i = 0; i < exp; ++i) r *= base;
  return r;
}

// (i-1)-tuple of parameter values for flat index p, last dimension fastest.
std::vector<double> param_tuple(const LatticeSpec& params, int64_t p, int64_t dims) {
  std::vector<double> t(static_cast<std::size_t>(dims));
  for (int64_t d = dims - 1; d >= 0; --d) {
    t[static_cast<std::size_t>(d)] = params.node(p % params.count);
    p /= params.count;
  }
  return t;
}

}  // namespace

std::size_t ChainSolution::interval_for(double s) const {
  for (std::size_t i = 1; i < anchors.size(); ++i)
    if (s < anchors[i]) return i;
  return anchors.size() - 1;
}

namespace {

struct ParamInterp {
  // Corner flat indices and weights of the multilinear interpolation over
  // the parameter lattice.
  std::vector<int64_t> index;
  std::vector<double> weight;
};

ParamInterp param_interp(const LatticeSpec& params, const std::vector<double>& frozen,
                         bool* clamped) {
  ParamInterp out;
  out.index = {0};
  out.weight = {1.0};
  for (double raw : frozen) {
    double x = raw;
    if (x < params.lo) {
      x = params.lo;
      if (clamped) *clamped = true;
    }
    if (x > params.hi) {
      x = params.hi;
      if (clamped) *clamped = true;
    }
    double pos = (x - params.lo) / params.step();
    auto j = static_cast<int64_t>(std::floor(pos));
    if (j >= params.count - 1) j = params.count - 2;
    double w = pos - static_cast<double>(j);
    std::vector<int64_t> idx;
    std::vector<double> wt;
    for (std::size_t c = 0; c < out.index.size(); ++c) {
      idx.push_back(out.index[c] * params.count + j);
      wt.push_back(out.weight[c] * (1.0 - w));
      if (w > 0.0) {
        idx.push_back(out.index[c] * params.count + j + 1);
        wt.push_back(out.weight[c] * w);
      }
    }
    out.index = std::move(idx);
    out.weight = std::move(wt);
  }
  return out;
}

}  // namespace

double ChainSolution::value(double s, double y, const std::vector<double>& frozen,
                            bool* clamped) const {
  std::size_t i = interval_for(s);
  const Interval& iv = intervals[i - 1];
  if (frozen.size() != i - 1)
    throw std::invalid_argument("ChainSolution::value: wrong number of frozen coordinates");
  ParamInterp pi = param_interp(params, frozen, clamped);
  double tpos = (s - iv.t_lo) / (iv.t_hi - iv.t_lo) * static_cast<double>(time_substeps);
  auto tm = static_cast<int64_t>(std::floor(tpos));
  if (tm >= time_substeps) tm = time_substeps - 1;
  if (tm < 0) tm = 0;
  double tw = tpos - static_cast<double>(tm);
  double yy = y;
  if (yy < space.lo) {
    yy = space.lo;
    if (clamped) *clamped = true;
  }
  if (yy > space.hi) {
    yy = space.hi;
    if (clamped) *clamped = true;
  }
  double ypos = (yy - space.lo) / space.step();
  auto jy = static_cast<int64_t>(std::floor(ypos));
  if (jy >= space.count - 1) jy = space.count - 2;
  double yw = ypos - static_cast<double>(jy);
  int64_t nt = time_substeps + 1;
  double acc = 0.0;
  for (std::size_t c = 0; c < pi.index.size(); ++c) {
    const double* base = iv.values.data() + (pi.index[c] * nt + tm) * space.count;
    const double* next = base + space.count;
    double lo_t = base[jy] * (1.0 - yw) + base[jy + 1] * yw;
    double hi_t = next[jy] * (1.0 - yw) + next[jy + 1] * yw;
    acc += pi.weight[c] * (lo_t * (1.0 - tw) + hi_t * tw);
  }
  return acc;
}

double ChainSolution::derivative_y(double s, double y, const std::vector<double>& frozen,
                                   bool* clamped) const {
  std::size_t i = interval_for(s);
  const Interval& iv = intervals[i - 1];
  if (frozen.size() != i - 1)
    throw std::invalid_argument("ChainSolution::derivative_y: wrong number of frozen coordinates");
  ParamInterp pi = param_interp(params, frozen, clamped);
  double tpos = (s - iv.t_lo) / (iv.t_hi - iv.t_lo) * static_cast<double>(time_substeps);
  auto tm = static_cast<int64_t>(std::floor(tpos));
  if (tm >= time_substeps) tm = time_substeps - 1;
  if (tm < 0) tm = 0;
  double tw = tpos - static_cast<double>(tm);
  double yy = y;
  if (yy < space.lo) {
    yy = space.lo;
    if (clamped) *clamped = true;
  }
  if (yy > space.hi) {
    yy = space.hi;
    if (clamped) *clamped = true;
  }
  double h = space.step();
  double ypos = (yy - space.lo) / h;
  auto jy = static_cast<int64_t>(std::floor(ypos));
  if (jy >= space.count - 1) jy = space.count - 2;
  double yw = ypos - static_cast<double>(jy);
  int64_t nt = time_substeps + 1;
  // Central differences at the bracketing nodes (one-sided at the ends),
  // then linear interpolation of the two node derivatives.
  auto node_dy = [&](const double* slice, int64_t j) {
    if (j <= 0) return (slice[1] - slice[0]) / h;
    if (j >= space.count - 1) return (slice[space.count - 1] - slice[space.count - 2]) / h;
    return (slice[j + 1] - slice[j - 1]) / (2.0 * h);
  };
  double acc = 0.0;
  for (std::size_t c = 0; c < pi.index.size(); ++c) {
    const double* base = iv.values.data() + (pi.index[c] * nt + tm) * space.count;
    const double* next = base + space.count;
    double lo_t = node_dy(base, jy) * (1.0 - yw) + node_dy(base, jy + 1) * yw;
    double hi_t = node_dy(next, jy) * (1.0 - yw) + node_dy(next, jy + 1) * yw;
    acc += pi.weight[c] * (lo_t * (1.0 - tw) + hi_t * tw);
  }
  return acc;
}

ChainSolution solve_chain(const std::function<double(const std::vector<double>&)>& f,
                          const SdeModel& model, const std::vector<double>& anchors,
                          const LatticeSpec& space, const LatticeSpec& params,
                          int64_t time_substeps) {
  if (anchors.size() < 2 || anchors.front() != 0.0)
    throw std::invalid_argument("solve_chain: anchors must start at 0 and include T");
  std::size_t n = anchors.size() - 1;
  if (n > 3) throw std::invalid_argument("solve_chain: unsupported, N <= 3 required");
  for (std::size_t i = 1; i < anchors.size(); ++i)
    if (!(anchors[i] > anchors[i - 1]))
      throw std::invalid_argument("solve_chain: anchors must increase");
  if (space.count < 5) throw std::invalid_argument("solve_chain: need at least 5 space nodes");
  if (params.count < 2) throw std::invalid_argument("solve_chain: need at least 2 parameter nodes");
  if (time_substeps < 3) throw std::invalid_argument("solve_chain: need at least 3 substeps");

  ChainSolution sol;
  sol.anchors = anchors;
  sol.space = space;
  sol.params = params;
  sol.time_substeps = time_substeps;
  sol.terminal = f;
  sol.intervals.resize(n);
  sol.stability_warning = space.count < 16 || time_substeps < 8;

  const int64_t J = space.count - 1;
  const int64_t nt = time_substeps + 1;
  Stepper stepper{&model, &space, space.step()};

  for (std::size_t i = n; i >= 1; --i) {
    ChainSolution::Interval& iv = sol.intervals[i - 1];
    iv.t_lo = anchors[i - 1];
    iv.t_hi = anchors[i];
    iv.n_param_points = ipow(params.count, static_cast<int64_t>(i) - 1);
    iv.times.resize(static_cast<std::size_t>(nt));
    double k = (iv.t_hi - iv.t_lo) / static_cast<double>(time_substeps);
    for (int64_t m = 0; m < nt; ++m)
      iv.times[static_cast<std::size_t>(m)] = iv.t_lo + static_cast<double>(m) * k;
    iv.values.assign(static_cast<std::size_t>(iv.n_param_points * nt * space.count), 0.0);

    for (int64_t p = 0; p < iv.n_param_points; ++p) {
      std::vector<double> frozen = param_tuple(params, p, static_cast<int64_t>(i) - 1);
      std::vector<double> v(static_cast<std::size_t>(space.count));
      if (i == n) {
        std::vector<double> args = frozen;
        args.push_back(0.0);
        for (int64_t j = 0; j <= J; ++j) {
          args.back() = space.node(j);
          v[static_cast<std::size_t>(j)] = f(args);
        }
      } else {
        // Diagonal substitution from the next interval's initial slice:
        // parameter tuple (frozen, y_j), interpolated along the last
        // parameter dimension.
        const ChainSolution::Interval& next = sol.intervals[i];
        for (int64_t j = 0; j <= J; ++j) {
          double y = space.node(j);
          double x = std::min(std::max(y, params.lo), params.hi);
          double pos = (x - params.lo) / params.step();
          auto q = static_cast<int64_t>(std::floor(pos));
          if (q >= params.count - 1) q = params.count - 2;
          double w = pos - static_cast<double>(q);
          const double* lo_slice = next.values.data() + ((p * params.count + q) * nt + 0) * space.count;
          const double* hi_slice = lo_slice + static_cast<std::size_t>(nt * space.count);
          v[static_cast<std::size_t>(j)] =
              (1.0 - w) * lo_slice[j] + w * hi_slice[j];
        }
      }
      double* store = iv.values.data() + static_cast<std::size_t>((p * nt + time_substeps)) *
                                             static_cast<std::size_t>(space.count);
      for (int64_t j = 0; j <= J; ++j) store[j] = v[static_cast<std::size_t>(j)];
      for (int64_t m = time_substeps - 1; m >= 0; --m) {
        double t_new = iv.times[static_cast<std::size_t>(m)];
        double t_old = iv.times[static_cast<std::size_t>(m + 1)];
        double theta = (m >= time_substeps - 2) ? 1.0 : 0.5;  // Rannacher start-up
        stepper.step(v, t_new, t_old, k, theta);
        store = iv.values.data() +
                static_cast<std::size_t>((p * nt + m)) * static_cast<std::size_t>(space.count);
        for (int64_t j = 0; j <= J; ++j) store[j] = v[static_cast<std::size_t>(j)];
      }
    }
  }

  // Truncation scale from the terminal payoff curvature.
  {
    const ChainSolution::Interval& last = sol.intervals[n - 1];
    const double* term =
        last.values.data() + static_cast<std::size_t>(time_substeps) * space.count;
    double curv = 0.0;
    for (int64_t j = 1; j < J; ++j)
      curv = std::max(curv, std::abs(term[j + 1] - 2.0 * term[j] + term[j - 1]));
    double k = (anchors[1] - anchors[0]) / static_cast<double>(time_substeps);
    sol.truncation_estimate = curv + k * k;
  }

  // Matching residual at space midpoints: linear interpolation of the
  // stored matching slice vs a fresh diagonal substitution.
  double resid = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const ChainSolution::Interval& iv = sol.intervals[i - 1];
    const ChainSolution::Interval& next = sol.intervals[i];
    for (int64_t p = 0; p < iv.n_param_points; ++p) {
      const double* slice = iv.values.data() +
                            static_cast<std::size_t>((p * nt + time_substeps)) *
                                static_cast<std::size_t>(space.count);
      for (int64_t j = 0; j + 1 <= J; ++j) {
        double ymid = 0.5 * (space.node(j) + space.node(j + 1));
        double a = 0.5 * (slice[j] + slice[j + 1]);
        // substituted value at (frozen, ymid; a_i, ymid)
        double x = std::min(std::max(ymid, params.lo), params.hi);
        double pos = (x - params.lo) / params.step();
        auto q = static_cast<int64_t>(std::floor(pos));
        if (q >= params.count - 1) q = params.count - 2;
        double w = pos - static_cast<double>(q);
        const double* lo_slice =
            next.values.data() + static_cast<std::size_t>(((p * params.count + q) * nt)) *
                                     static_cast<std::size_t>(space.count);
        const double* hi_slice = lo_slice + static_cast<std::size_t>(nt * space.count);
        double ypos = (ymid - space.lo) / space.step();
        auto jy = static_cast<int64_t>(std::floor(ypos));
        if (jy >= space.count - 1) jy = space.count - 2;
        double yw = ypos - static_cast<double>(jy);
        double b = (1.0 - w) * (lo_slice[jy] * (1.0 - yw) + lo_slice[jy + 1] * yw) +
                   w * (hi_slice[jy] * (1.0 - yw) + hi_slice[jy + 1] * yw);
        resid = std::max(resid, std::abs(a - b));
      }
    }
  }
  sol.matching_residual = resid;
  return sol;
}

ChainHedgeResult hedge_from_chain(const ChainSolution& sol, const SampledPath& scenario) {
  ChainHedgeResult out;
  const TimeGrid& grid = scenario.grid;
  if (std::abs(grid.horizon - sol.horizon()) > 1e-9)
    throw std::invalid_argument("hedge_from_chain: scenario horizon mismatch");
  std::vector<int64_t> anchor_steps;
  for (std::size_t i = 1; i < sol.anchors.size(); ++i) {
    int64_t st = snap_to_step(sol.anchors[i], grid.dt());
    if (st < 0) throw std::invalid_argument("hedge_from_chain: anchor off the scenario grid");
    anchor_steps.push_back(st);
  }
  out.initial_value = sol.value(0.0, scenario.values.front(), {}, &out.clamped);
  double gains = 0.0;
  std::vector<double> frozen;
  std::size_t next_anchor = 0;
  for (int64_t k = 0; k < grid.steps; ++k) {
    double s = grid.node(k);
    while (next_anchor + 1 < anchor_steps.size() && k >= anchor_steps[next_anchor]) {
      frozen.push_back(scenario.values[static_cast<std::size_t>(anchor_steps[next_anchor])]);
      ++next_anchor;
    }
    double xi =
        sol.derivative_y(s, scenario.values[static_cast<std::size_t>(k)], frozen, &out.clamped);
    out.times.push_back(s);
    out.strategy.push_back(xi);
    gains += xi * (scenario.values[static_cast<std::size_t>(k + 1)] -
                   scenario.values[static_cast<std::size_t>(k)]);
  }
  std::vector<double> args;
  for (int64_t st : anchor_steps) args.push_back(scenario.values[static_cast<std::size_t>(st)]);
  out.terminal_payoff = sol.terminal(args);
  out.replication_error = out.terminal_payoff - out.initial_value - gains;
  return out;
}

CrossValReport cross_validate(const ChainSolution& sol, const PathPayoff& payoff,
                              const SdeModel& model, const TimeGrid& grid,
                              const std::vector<std::pair<double, WindowSlice>>& probes,
                              int64_t inner_n, uint64_t seed, int threads,
                              double scheme_allowance) {
  CrossValReport report;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    double s = probes[p].first;
    const WindowSlice& eta = probes[p].second;
    for (double a : sol.anchors)
      if (std::abs(s - a) < 0.5 * grid.dt())
        throw std::invalid_argument("cross_validate: probe time on the anchor set");
    MCEstimate mc =
        estimate_delta0(payoff, model, grid, s, eta, inner_n, mix_seed(seed, p), threads);
    std::size_t i = sol.interval_for(s);
    std::vector<double> frozen;
    for (std::size_t a = 1; a < i; ++a) {
      int64_t back = snap_to_step(s - sol.anchors[a], grid.dt());
      frozen.push_back(eta.at_lag_steps(back));
    }
    double pde = sol.derivative_y(s, eta.at_zero(), frozen);
    CrossValProbe row;
    row.s = s;
    row.y = eta.at_zero();
    row.mc = mc.value;
    row.mc_stderr = mc.stderr_;
    row.pde = pde;
    row.z = std::abs(mc.value - pde) / (mc.stderr_ + scheme_allowance);
    report.max_abs_z = std::max(report.max_abs_z, row.z);
    report.probes.push_back(row);
  }
  return report;
}

void save_chain(const ChainSolution& sol, const std::string& dir, const std::string& basename) {
  nlohmann::json meta;
  meta["anchors"] = sol.anchors;
  meta["space"] = {{"lo", sol.space.lo}, {"hi", sol.space.hi}, {"count", sol.space.count}};
  meta["params"] = {{"lo", sol.params.lo}, {"hi", sol.params.hi}, {"count", sol.params.count}};
  meta["time_substeps"] = sol.time_substeps;
  meta["scheme"] = sol.scheme;
  meta["matching_residual"] = sol.matching_residual;
  meta["truncation_estimate"] = sol.truncation_estimate;
  meta["stability_warning"] = sol.stability_warning;
  std::vector<std::string> files;
  for (std::size_t i = 1; i <= sol.n(); ++i)
    files.push_back(basename + "_interval" + std::to_string(i) + ".csv");
  meta["interval_files"] = files;
  std::ofstream mf(dir + "/" + basename + "_meta.json");
  if (!mf) throw std::runtime_error("save_chain: cannot open metadata file");
  mf << meta.dump(2) << "\n";

  const int64_t nt = sol.time_substeps + 1;
  for (std::size_t i = 1; i <= sol.n(); ++i) {
    const ChainSolution::Interval& iv = sol.intervals[i - 1];
    std::ofstream out(dir + "/" + files[i - 1]);
    if (!out) throw std::runtime_error("save_chain: cannot open interval file");
    out << "param_index,t,y,value\n";
    char buf[96];
    for (int64_t p = 0; p < iv.n_param_points; ++p)
      for (int64_t m = 0; m < nt; ++m)
        for (int64_t j = 0; j < sol.space.count; ++j) {
          double v = iv.values[static_cast<std::size_t>((p * nt + m) * sol.space.count + j)];
          std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g\n",
                        static_cast<long long>(p), iv.times[static_cast<std::size_t>(m)],
                        sol.space.node(j), v);
          out << buf;
        }
  }
}

}  // namespace chivar
