#include "core/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/chi_window.hpp"
#include "core/fukushima.hpp"
#include "core/parallel.hpp"
#include "core/pde_chain.hpp"
#include "core/representation.hpp"

namespace chivar {

namespace {

using nlohmann::json;

std::vector<std::pair<std::string, double>> params_of(const json& block) {
  std::vector<std::pair<std::string, double>> out;
  if (block.contains("params"))
    for (auto it = block["params"].begin(); it != block["params"].end(); ++it)
      out.emplace_back(it.key(), it.value().get<double>());
  return out;
}

struct Errors {
  std::vector<std::pair<std::string, std::string>> items;
  void add(const std::string& field, const std::string& message) {
    items.emplace_back(field, message);
  }
  bool ok() const { return items.empty(); }
  std::string to_json() const {
    json j;
    j["valid"] = items.empty();
    j["errors"] = json::array();
    for (const auto& [f, m] : items) j["errors"].push_back({{"field", f}, {"message", m}});
    return j.dump();
  }
};

struct Config {
  json raw;
  std::string kind;
  TimeGrid grid;
  uint64_t seed = 12345;
  std::string output = "out";

  double num(const std::string& key, double fallback) const {
    if (raw.contains("numeric") && raw["numeric"].contains(key))
      return raw["numeric"][key].get<double>();
    return fallback;
  }
  int64_t num_int(const std::string& key, int64_t fallback) const {
    return static_cast<int64_t>(num(key, static_cast<double>(fallback)));
  }
  std::vector<double> epsilons() const {
    std::vector<double> out;
    if (raw.contains("numeric") && raw["numeric"].contains("epsilons"))
      for (const auto& e : raw["numeric"]["epsilons"]) out.push_back(e.get<double>());
    return out;
  }
};

bool grid_multiple(double v, double dt) { return snap_to_step(v, dt) >= 1; }

Errors validate_config(const json& raw, Config* out) {
  Errors errors;
  Config cfg;
  cfg.raw = raw;
  static const std::vector<std::string> kinds = {"qv-sweep",  "chi-window", "fukushima",
                                                 "represent", "hedge-mc",   "hedge-pde",
                                                 "cross-validate", "malliavin"};
  cfg.kind = raw.value("kind", "");
  if (std::find(kinds.begin(), kinds.end(), cfg.kind) == kinds.end())
    errors.add("kind", "unknown experiment kind '" + cfg.kind + "'");

  double horizon = 0.0;
  int64_t steps = 0;
  if (!raw.contains("grid")) {
    errors.add("grid", "missing grid block");
  } else {
    horizon = raw["grid"].value("horizon", 0.0);
    steps = raw["grid"].value("steps", int64_t{0});
    if (!(horizon > 0.0)) errors.add("grid.horizon", "horizon must be positive");
    if (steps < 2) errors.add("grid.steps", "need at least 2 steps");
  }
  if (!errors.ok()) return errors;
  cfg.grid = TimeGrid{horizon, steps};
  cfg.seed = raw.value("seed", uint64_t{12345});
  cfg.output = raw.value("output", std::string("out"));
  double dt = cfg.grid.dt();

  if (raw.contains("model")) {
    ModelSpec spec{raw["model"].value("name", ""), params_of(raw["model"])};
    auto names = model_registry_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end())
      errors.add("model.name", "unknown model '" + spec.name + "'");
  } else if (cfg.kind != "qv-sweep") {
    errors.add("model", "missing model block");
  }

  auto check_payoff = [&]() {
    if (!raw.contains("payoff")) {
      errors.add("payoff", "missing payoff block");
      return;
    }
    PayoffSpec spec{raw["payoff"].value("name", ""), params_of(raw["payoff"])};
    auto names = payoff_registry_names();
    if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
      errors.add("payoff.name", "unknown payoff '" + spec.name + "'");
      return;
    }
    try {
      PathPayoff p = make_payoff(spec, horizon);
      for (std::size_t i = 0; i < p.anchors.size(); ++i)
        if (snap_to_step(p.anchors[i], dt) < 0)
          errors.add("payoff.anchors[" + std::to_string(i) + "]",
                     "anchor not aligned to the grid");
    } catch (const std::exception& e) {
      errors.add("payoff", e.what());
    }
  };

  if (cfg.kind == "chi-window") {
    if (!raw.contains("measure") || !raw["measure"].contains("anchors")) {
      errors.add("measure.anchors", "chi-window needs measure anchors");
    } else {
      auto anchors = raw["measure"]["anchors"].get<std::vector<double>>();
      if (anchors.size() < 2 || anchors.back() != 0.0)
        errors.add("measure.anchors", "anchors must end at 0");
      for (std::size_t i = 0; i < anchors.size(); ++i)
        if (anchors[i] != 0.0 && snap_to_step(-anchors[i], dt) < 1)
          errors.add("measure.anchors[" + std::to_string(i) + "]",
                     "anchor not aligned to the grid");
    }
  }
  if (cfg.kind == "fukushima") {
    double tau = raw.contains("window") ? raw["window"].value("tau", 0.0) : 0.0;
    if (!grid_multiple(tau, dt))
      errors.add("window.tau", "tau must be a positive grid multiple");
    if (!raw.contains("functional")) {
      errors.add("functional", "missing functional block");
    } else {
      auto names = functional_registry_names();
      std::string fname = raw["functional"].value("name", "");
      if (std::find(names.begin(), names.end(), fname) == names.end())
        errors.add("functional.name", "unknown functional '" + fname + "'");
    }
  }
  if (cfg.kind == "represent" || cfg.kind == "hedge-mc" || cfg.kind == "hedge-pde" ||
      cfg.kind == "cross-validate" || cfg.kind == "malliavin")
    check_payoff();

  if (cfg.kind == "qv-sweep" || cfg.kind == "chi-window" || cfg.kind == "fukushima") {
    auto eps = cfg.epsilons();
    if (eps.empty()) errors.add("numeric.epsilons", "need a nonempty epsilon schedule");
    for (std::size_t i = 0; i < eps.size(); ++i) {
      if (!grid_multiple(eps[i], dt))
        errors.add("numeric.epsilons[" + std::to_string(i) + "]",
                   "epsilon must be a grid multiple");
      if (i > 0 && !(eps[i] < eps[i - 1]))
        errors.add("numeric.epsilons", "schedule must strictly decrease");
    }
    if (cfg.num_int("paths", 8) < 2) errors.add("numeric.paths", "need at least 2 paths");
  }
  if (cfg.kind == "hedge-mc") {
    int64_t stride = cfg.num_int("rebalance_stride", 8);
    if (stride < 1 || steps % stride != 0)
      errors.add("numeric.rebalance_stride", "stride must divide the step count");
  }
  if (cfg.kind == "represent" || cfg.kind == "malliavin") {
    double s = raw.contains("state") ? raw["state"].value("s", 0.0) : 0.0;
    if (snap_to_step(s, dt) < 0 || s >= horizon)
      errors.add("state.s", "s must be a grid node in [0, T)");
  }
  if (cfg.kind == "hedge-pde" || cfg.kind == "cross-validate") {
    if (cfg.num_int("space_count", 201) < 5)
      errors.add("numeric.space_count", "need at least 5 space nodes");
    if (cfg.num_int("time_substeps", 128) < 3)
      errors.add("numeric.time_substeps", "need at least 3 substeps");
  }
  if (out && errors.ok()) *out = cfg;
  return errors;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_named_curve_csv(const TimeGrid& grid, const std::vector<double>& values,
                           const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file);
  out << "t,estimate\n";
  for (int64_t k = 0; k <= grid.steps; ++k)
    out << fmt(grid.node(k)) << "," << fmt(values[static_cast<std::size_t>(k)]) << "\n";
}

struct Manifest {
  json files = json::array();
  void add(const std::string& name, const std::string& role, const std::string& criterion) {
    files.push_back({{"file", name}, {"role", role}, {"criterion", criterion}});
  }
};

WindowSlice state_window(const Config& cfg, const LagGrid& lags) {
  double level = 1.0;
  std::string kind = "constant";
  double rate = 0.0;
  if (cfg.raw.contains("state") && cfg.raw["state"].contains("eta")) {
    const json& eta = cfg.raw["state"]["eta"];
    kind = eta.value("kind", "constant");
    level = eta.value("level", 1.0);
    rate = eta.value("rate", 0.0);
  }
  WindowSlice w;
  w.lag_grid = lags;
  for (int64_t j = 0; j <= lags.lags; ++j) {
    double y = lags.node(j);
    if (kind == "exp")
      w.values.push_back(level * std::exp(rate * y));
    else
      w.values.push_back(level);
  }
  return w;
}

SdeModel config_model(const Config& cfg) {
  if (!cfg.raw.contains("model")) return make_model({"wiener", {}});
  return make_model({cfg.raw["model"].value("name", "wiener"), params_of(cfg.raw["model"])});
}

double config_x0(const Config& cfg) {
  if (cfg.raw.contains("state") && cfg.raw["state"].contains("x0"))
    return cfg.raw["state"]["x0"].get<double>();
  std::string name = cfg.raw.contains("model") ? cfg.raw["model"].value("name", "wiener")
                                               : std::string("wiener");
  return name == "wiener" || name == "constant" ? 0.0 : 1.0;
}

// Mean over ensemble paths of a per-path curve, slot-parallel.
std::vector<double> ensemble_mean_curve(
    int64_t n, int threads, int64_t nodes,
    const std::function<std::vector<double>(int64_t)>& curve_of) {
  std::vector<std::vector<double>> slot(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), threads,
               [&](std::size_t i) { slot[i] = curve_of(static_cast<int64_t>(i)); });
  std::vector<double> mean(static_cast<std::size_t>(nodes), 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t k = 0; k < nodes; ++k)
      mean[static_cast<std::size_t>(k)] += slot[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  for (auto& v : mean) v /= static_cast<double>(n);
  return mean;
}

SampledPath model_path(const SdeModel& model, const Config& cfg, const NoiseBatch& noise,
                       int64_t index, double x0) {
  LagGrid lags{cfg.grid.horizon, cfg.grid.steps, cfg.grid.dt()};
  return simulate_flow(model, 0.0, constant_window(lags, x0), cfg.grid, noise.row(index));
}

json assert_block(const Config& cfg) {
  return cfg.raw.contains("assert") ? cfg.raw["assert"] : json::object();
}

// ---- kind runners ------------------------------------------------------

int run_qv_sweep(const Config& cfg, const RunOptions& opt, const std::string& dir,
                 Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  auto eps = cfg.epsilons();
  int64_t paths = cfg.num_int("paths", 8);
  double x0 = config_x0(cfg);
  NoiseBatch noise(seed, cfg.grid, paths);
  json summary;
  summary["epsilons"] = eps;
  std::vector<double> terminal_means, sup_dev;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    auto mean = ensemble_mean_curve(paths, opt.threads, cfg.grid.nodes(), [&](int64_t i) {
      SampledPath x = model_path(model, cfg, noise, i, x0);
      return epsilon_covariation(x, x, eps[e]).values;
    });
    double dev = 0.0;
    for (int64_t k = 0; k <= cfg.grid.steps; ++k)
      dev = std::max(dev, std::abs(mean[static_cast<std::size_t>(k)] - cfg.grid.node(k)));
    sup_dev.push_back(dev);
    terminal_means.push_back(mean.back());
    std::string name = "qv_mean_eps" + std::to_string(e) + ".csv";
    write_named_curve_csv(cfg.grid, mean, dir + "/" + name);
    manifest.add(name, "mean quadratic-variation curve, eps index " + std::to_string(e), "A1");
  }
  summary["terminal_means"] = terminal_means;
  summary["sup_dev_from_identity"] = sup_dev;
  std::ofstream(dir + "/summary.json") << json(summary).dump(2) << "\n";
  manifest.add("summary.json", "per-eps terminal means and identity deviation", "A1");

  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty()) {
    double lo = ab.value("terminal_lo", 0.0), hi = ab.value("terminal_hi", 1e300);
    if (!(terminal_means.back() >= lo && terminal_means.back() <= hi)) ++failures;
  }
  return failures;
}

Chi2Measure config_chi2(const Config& cfg, const LagGrid& lags) {
  const json& mb = cfg.raw["measure"];
  AnchorSet anchors = build_anchors(mb["anchors"].get<std::vector<double>>(), lags);
  Chi2Measure mu = zero_chi2(lags, anchors);
  if (mb.contains("atoms")) mu.atom_matrix = mb["atoms"].get<std::vector<std::vector<double>>>();
  if (mb.contains("kernel_constant")) {
    double c = mb["kernel_constant"].get<double>();
    if (c != 0.0)
      mu.kernel.assign(static_cast<std::size_t>(lags.nodes()),
                       std::vector<double>(static_cast<std::size_t>(lags.nodes()), c));
  }
  return mu;
}

int run_chi_window(const Config& cfg, const RunOptions& opt, const std::string& dir,
                   Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  auto eps = cfg.epsilons();
  int64_t paths = cfg.num_int("paths", 8);
  double tau = -cfg.raw["measure"]["anchors"].get<std::vector<double>>().front();
  LagGrid lags = build_lag_grid(tau, cfg.grid);
  Chi2Measure mu = config_chi2(cfg, lags);
  double x0 = config_x0(cfg);
  NoiseBatch noise(seed, cfg.grid, paths);
  json rows = json::array();
  double worst = 0.0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    int64_t nodes = cfg.grid.nodes();
    auto direct = ensemble_mean_curve(paths, opt.threads, nodes, [&](int64_t i) {
      SampledPath x = model_path(model, cfg, noise, i, x0);
      return chi_cov_direct(x, x, mu, eps[e]).values;
    });
    auto closed = ensemble_mean_curve(paths, opt.threads, nodes, [&](int64_t i) {
      SampledPath x = model_path(model, cfg, noise, i, x0);
      return chi_cov_closed(estimate_lag_brackets(x, x, mu, eps[e]), mu, &cfg.grid).values;
    });
    double sup = 0.0;
    for (std::size_t k = 0; k < direct.size(); ++k)
      sup = std::max(sup, std::abs(direct[k] - closed[k]));
    worst = std::max(worst, sup);
    rows.push_back({{"epsilon", eps[e]}, {"sup_discrepancy", sup}});
    std::string dn = "chi_direct_eps" + std::to_string(e) + ".csv";
    std::string cn = "chi_closed_eps" + std::to_string(e) + ".csv";
    write_named_curve_csv(cfg.grid, direct, dir + "/" + dn);
    write_named_curve_csv(cfg.grid, closed, dir + "/" + cn);
    manifest.add(dn, "mean direct chi-covariation curve", "A3");
    manifest.add(cn, "mean closed-form chi-covariation curve", "A3");
  }
  std::ofstream(dir + "/summary.json") << json({{"comparisons", rows}}).dump(2) << "\n";
  manifest.add("summary.json", "direct vs closed sup discrepancies", "A3");
  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty() && worst > ab.value("max_sup_discrepancy", 1e300)) ++failures;
  return failures;
}

int run_fukushima(const Config& cfg, const RunOptions& opt, const std::string& dir,
                  Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  auto eps = cfg.epsilons();
  int64_t paths = cfg.num_int("paths", 8);
  double tau = cfg.raw["window"].value("tau", 0.25);
  LagGrid lags = build_lag_grid(tau, cfg.grid);
  FunctionalSpec fspec{cfg.raw["functional"].value("name", ""), params_of(cfg.raw["functional"])};
  WindowFunctional f = make_functional(fspec, lags);
  double x0 = config_x0(cfg);
  double ortho_threshold = cfg.num("ortho_threshold", 0.05);
  NoiseBatch noise(seed, cfg.grid, 2 * paths);  // rows p and p + paths (test martingale)

  int64_t nodes = cfg.grid.nodes();
  std::vector<DecompositionResult> slot(static_cast<std::size_t>(paths));
  parallel_for(static_cast<std::size_t>(paths), opt.threads, [&](std::size_t i) {
    SampledPath x = model_path(model, cfg, noise, static_cast<int64_t>(i), x0);
    // martingale part of X (driftless models required by validation)
    CovariationCurve bracket;
    bracket.grid = cfg.grid;
    bracket.epsilon = 0.0;
    bracket.values.resize(static_cast<std::size_t>(nodes));
    bracket.values[0] = 0.0;
    for (int64_t k = 0; k < cfg.grid.steps; ++k) {
      double sg = model.sigma(cfg.grid.node(k), x.values[static_cast<std::size_t>(k)]);
      bracket.values[static_cast<std::size_t>(k + 1)] =
          bracket.values[static_cast<std::size_t>(k)] + sg * sg * cfg.grid.dt();
    }
    SampledPath indep = wiener_path(cfg.grid, seed, static_cast<uint64_t>(paths + static_cast<int64_t>(i)));
    slot[i] = decompose(f, x, x, bracket, {x, indep}, eps, ortho_threshold);
  });

  auto mean_of = [&](auto&& get) {
    std::vector<double> m(static_cast<std::size_t>(nodes), 0.0);
    for (const auto& r : slot) {
      const std::vector<double>& v = get(r);
      for (std::size_t k = 0; k < m.size(); ++k) m[k] += v[k];
    }
    for (auto& v : m) v /= static_cast<double>(paths);
    return m;
  };
  auto mean_transformed = mean_of([](const DecompositionResult& r) -> const std::vector<double>& {
    return r.transformed.values;
  });
  auto mean_mart = mean_of([](const DecompositionResult& r) -> const std::vector<double>& {
    return r.martingale_part.values;
  });
  auto mean_rem = mean_of([](const DecompositionResult& r) -> const std::vector<double>& {
    return r.remainder.values;
  });
  auto mean_qv_est = mean_of([](const DecompositionResult& r) -> const std::vector<double>& {
    return r.remainder_qv_estimate.values;
  });
  auto mean_qv_pred = mean_of([](const DecompositionResult& r) -> const std::vector<double>& {
    return r.remainder_qv_predicted.values;
  });
  write_named_curve_csv(cfg.grid, mean_transformed, dir + "/transformed.csv");
  write_named_curve_csv(cfg.grid, mean_mart, dir + "/martingale_part.csv");
  write_named_curve_csv(cfg.grid, mean_rem, dir + "/remainder.csv");
  manifest.add("transformed.csv", "mean transformed path", "A4");
  manifest.add("martingale_part.csv", "mean explicit martingale part", "A4");
  manifest.add("remainder.csv", "mean remainder path", "A4");

  double qv_sup = 0.0;
  for (std::size_t k = 0; k < mean_qv_est.size(); ++k)
    qv_sup = std::max(qv_sup, std::abs(mean_qv_est[k] - mean_qv_pred[k]));
  // mean orthogonality sup-norms per test martingale
  json ortho = json::array();
  std::size_t n_tests = slot.front().orthogonality.size();
  double ortho_final_max = 0.0;
  for (std::size_t t = 0; t < n_tests; ++t) {
    std::vector<double> mean_sup(eps.size(), 0.0);
    for (const auto& r : slot)
      for (std::size_t e = 0; e < eps.size(); ++e)
        mean_sup[e] += r.orthogonality[t].sup_norms[e] / static_cast<double>(paths);
    ortho_final_max = std::max(ortho_final_max, mean_sup.back());
    ortho.push_back({{"schedule", eps}, {"mean_sup_norms", mean_sup}});
  }
  json diag;
  diag["orthogonality"] = ortho;
  diag["remainder_qv_sup_discrepancy"] = qv_sup;
  std::ofstream(dir + "/diagnostics.json") << diag.dump(2) << "\n";
  manifest.add("diagnostics.json", "orthogonality and remainder-bracket comparison", "A4");

  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty()) {
    if (qv_sup > ab.value("max_remainder_qv_discrepancy", 1e300)) ++failures;
    if (ortho_final_max > ab.value("ortho_final_max", 1e300)) ++failures;
  }
  return failures;
}

int run_represent(const Config& cfg, const RunOptions& opt, const std::string& dir,
                  Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  PathPayoff payoff = make_payoff({cfg.raw["payoff"].value("name", ""), params_of(cfg.raw["payoff"])},
                                  cfg.grid.horizon);
  LagGrid lags{cfg.grid.horizon, cfg.grid.steps, cfg.grid.dt()};
  WindowSlice eta = state_window(cfg, lags);
  double s = cfg.raw.contains("state") ? cfg.raw["state"].value("s", 0.0) : 0.0;
  int64_t n = cfg.num_int("paths", 4096);
  MCEstimate u = estimate_u(payoff, model, cfg.grid, s, eta, n, seed, opt.threads);
  json j;
  j["u"] = {{"value", u.value}, {"stderr", u.stderr_}, {"n", u.n_paths}};
  if (!payoff.weighted_increment) {
    MCEstimate d0 = estimate_delta0(payoff, model, cfg.grid, s, eta, n, seed, opt.threads);
    LagDerivative perp = estimate_perp(payoff, model, cfg.grid, s, eta, n, seed, opt.threads);
    j["delta0"] = {{"value", d0.value}, {"stderr", d0.stderr_}};
    json atoms = json::array();
    for (std::size_t i = 0; i < perp.atoms.size(); ++i)
      atoms.push_back({{"lag", perp.atom_lags[i]},
                       {"value", perp.atoms[i]},
                       {"stderr", perp.atom_stderr[i]}});
    j["perp_atoms"] = atoms;
    std::ofstream csv(dir + "/perp_density.csv");
    csv << "lag,value,stderr\n";
    for (int64_t k = 0; k <= lags.lags; ++k) {
      double v = perp.density.empty() ? 0.0 : perp.density[static_cast<std::size_t>(k)];
      double se = perp.density_stderr.empty() ? 0.0 : perp.density_stderr[static_cast<std::size_t>(k)];
      csv << fmt(lags.node(k)) << "," << fmt(v) << "," << fmt(se) << "\n";
    }
    manifest.add("perp_density.csv", "perpendicular derivative density", "A9");
  }
  std::ofstream(dir + "/estimates.json") << j.dump(2) << "\n";
  manifest.add("estimates.json", "conditional-expectation value and derivative atoms", "A9");
  return 0;
}

int run_hedge_mc(const Config& cfg, const RunOptions& opt, const std::string& dir,
                 Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  PathPayoff payoff = make_payoff({cfg.raw["payoff"].value("name", ""), params_of(cfg.raw["payoff"])},
                                  cfg.grid.horizon);
  LagGrid lags{cfg.grid.horizon, cfg.grid.steps, cfg.grid.dt()};
  WindowSlice eta0 = constant_window(lags, config_x0(cfg));
  int64_t scenarios = cfg.num_int("scenarios", 8);
  int64_t levels = cfg.num_int("levels", 3);
  int64_t stride0 = cfg.num_int("rebalance_stride", 16);
  int64_t inner0 = cfg.num_int("inner_paths", 512);
  json level_rows = json::array();
  std::vector<double> rms_by_level;
  for (int64_t lvl = 0; lvl < levels; ++lvl) {
    int64_t stride = std::max<int64_t>(1, stride0 >> lvl);
    int64_t inner = inner0 << (2 * lvl);
    std::vector<double> errs(static_cast<std::size_t>(scenarios));
    parallel_for(static_cast<std::size_t>(scenarios), opt.threads, [&](std::size_t sc) {
      HedgeResult h = replicate(payoff, model, cfg.grid, eta0, seed, static_cast<int64_t>(sc),
                                stride, inner, mix_seed(seed, 1000 + sc), 1);
      errs[sc] = h.replication_error;
    });
    double rms = 0.0;
    for (double e : errs) rms += e * e;
    rms = std::sqrt(rms / static_cast<double>(scenarios));
    rms_by_level.push_back(rms);
    level_rows.push_back({{"stride", stride}, {"inner_paths", inner}, {"rms_error", rms}});
    if (lvl == levels - 1) {
      HedgeResult h = replicate(payoff, model, cfg.grid, eta0, seed, 0, stride, inner,
                                mix_seed(seed, 1000), opt.threads);
      std::ofstream csv(dir + "/strategy.csv");
      csv << "s,xi,stderr\n";
      for (std::size_t r = 0; r < h.rebalance_times.size(); ++r)
        csv << fmt(h.rebalance_times[r]) << "," << fmt(h.strategy[r]) << ","
            << fmt(h.strategy_stderr[r]) << "\n";
      manifest.add("strategy.csv", "finest-level strategy for scenario 0", "A7");
    }
  }
  std::ofstream(dir + "/hedge_mc.json") << json({{"levels", level_rows}}).dump(2) << "\n";
  manifest.add("hedge_mc.json", "replication error by refinement level", "A7");
  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty() && ab.value("monotone_rms", false)) {
    for (std::size_t l = 1; l < rms_by_level.size(); ++l)
      if (!(rms_by_level[l] < rms_by_level[l - 1])) ++failures;
  }
  return failures;
}

ChainSolution config_chain(const Config& cfg, const SdeModel& model, const PathPayoff& payoff) {
  if (payoff.weighted_increment || payoff.has_density())
    throw std::invalid_argument("PDE chain needs a discrete payoff");
  std::vector<double> anchors = {0.0};
  for (double a : payoff.anchors) anchors.push_back(a);
  LatticeSpec space{cfg.num("space_lo", 0.0), cfg.num("space_hi", 4.0),
                    cfg.num_int("space_count", 201)};
  LatticeSpec params{cfg.num("param_lo", space.lo), cfg.num("param_hi", space.hi),
                     cfg.num_int("param_count", 41)};
  int64_t substeps = cfg.num_int("time_substeps", 128);
  PathPayoff p = payoff;
  SampledPath dummy(build_grid(cfg.grid.horizon, 2),
                    std::vector<double>(3, 0.0));
  auto f = [p, dummy](const std::vector<double>& v) { return p.f(v, dummy); };
  return solve_chain(f, model, anchors, space, params, substeps);
}

int run_hedge_pde(const Config& cfg, const RunOptions& opt, const std::string& dir,
                  Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  PathPayoff payoff = make_payoff({cfg.raw["payoff"].value("name", ""), params_of(cfg.raw["payoff"])},
                                  cfg.grid.horizon);
  ChainSolution sol = config_chain(cfg, model, payoff);
  save_chain(sol, dir, "chain");
  manifest.add("chain_meta.json", "chain solver metadata", "A6");
  for (std::size_t i = 1; i <= sol.n(); ++i)
    manifest.add("chain_interval" + std::to_string(i) + ".csv", "value grid", "A6");

  int64_t scenarios = cfg.num_int("scenarios", 8);
  double x0 = config_x0(cfg);
  NoiseBatch noise(seed, cfg.grid, scenarios);
  std::vector<double> errs(static_cast<std::size_t>(scenarios));
  bool clamped = false;
  std::vector<ChainHedgeResult> results(static_cast<std::size_t>(scenarios));
  parallel_for(static_cast<std::size_t>(scenarios), opt.threads, [&](std::size_t sc) {
    SampledPath x = model_path(model, cfg, noise, static_cast<int64_t>(sc), x0);
    results[sc] = hedge_from_chain(sol, x);
    errs[sc] = results[sc].replication_error;
  });
  double rms = 0.0;
  for (std::size_t sc = 0; sc < errs.size(); ++sc) {
    rms += errs[sc] * errs[sc];
    clamped = clamped || results[sc].clamped;
  }
  rms = std::sqrt(rms / static_cast<double>(scenarios));
  {
    std::ofstream csv(dir + "/strategy.csv");
    csv << "s,xi,stderr\n";
    const ChainHedgeResult& h = results.front();
    for (std::size_t r = 0; r < h.times.size(); ++r)
      csv << fmt(h.times[r]) << "," << fmt(h.strategy[r]) << ",0\n";
  }
  manifest.add("strategy.csv", "chain hedge strategy for scenario 0", "A6");
  json j;
  j["initial_value"] = results.front().initial_value;
  j["rms_replication_error"] = rms;
  j["clamped"] = clamped;
  j["matching_residual"] = sol.matching_residual;
  std::ofstream(dir + "/hedge_pde.json") << j.dump(2) << "\n";
  manifest.add("hedge_pde.json", "chain hedge summary", "A6");
  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty() && rms > ab.value("max_rms_error", 1e300)) ++failures;
  return failures;
}

int run_cross_validate(const Config& cfg, const RunOptions& opt, const std::string& dir,
                       Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  PathPayoff payoff = make_payoff({cfg.raw["payoff"].value("name", ""), params_of(cfg.raw["payoff"])},
                                  cfg.grid.horizon);
  ChainSolution sol = config_chain(cfg, model, payoff);
  int64_t n_probes = cfg.num_int("probes", 10);
  int64_t inner = cfg.num_int("inner_paths", 1 << 14);
  double x0 = config_x0(cfg);
  LagGrid lags{cfg.grid.horizon, cfg.grid.steps, cfg.grid.dt()};
  std::vector<std::pair<double, WindowSlice>> probes;
  for (int64_t p = 0; p < n_probes; ++p) {
    double frac = (static_cast<double>(p) + 0.5) / static_cast<double>(n_probes);
    int64_t ks = std::max<int64_t>(1, std::min(cfg.grid.steps - 1,
                                               static_cast<int64_t>(frac * static_cast<double>(cfg.grid.steps))));
    double s = cfg.grid.node(ks);
    bool on_anchor = false;
    for (double a : sol.anchors)
      if (std::abs(s - a) < 0.5 * cfg.grid.dt()) on_anchor = true;
    if (on_anchor) s = cfg.grid.node(ks - 1);
    double level = x0 * (0.8 + 0.4 * static_cast<double>(p) /
                                   std::max<double>(1.0, static_cast<double>(n_probes - 1)));
    probes.emplace_back(s, constant_window(lags, level));
  }
  CrossValReport report = cross_validate(sol, payoff, model, cfg.grid, probes, inner, seed,
                                         opt.threads, cfg.num("scheme_allowance", 0.005));
  json rows = json::array();
  for (const auto& p : report.probes)
    rows.push_back({{"s", p.s},
                    {"y", p.y},
                    {"mc", p.mc},
                    {"mc_stderr", p.mc_stderr},
                    {"pde", p.pde},
                    {"z", p.z}});
  std::ofstream(dir + "/cross_validate.json")
      << json({{"probes", rows}, {"max_abs_z", report.max_abs_z}}).dump(2) << "\n";
  manifest.add("cross_validate.json", "MC vs PDE derivative comparison", "A6");
  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty() && report.max_abs_z > ab.value("max_abs_z", 1e300)) ++failures;
  return failures;
}

int run_malliavin(const Config& cfg, const RunOptions& opt, const std::string& dir,
                  Manifest& manifest, uint64_t seed) {
  SdeModel model = config_model(cfg);
  PathPayoff payoff = make_payoff({cfg.raw["payoff"].value("name", ""), params_of(cfg.raw["payoff"])},
                                  cfg.grid.horizon);
  LagGrid lags{cfg.grid.horizon, cfg.grid.steps, cfg.grid.dt()};
  WindowSlice eta = state_window(cfg, lags);
  double s = cfg.raw.contains("state") ? cfg.raw["state"].value("s", 0.0) : 0.0;
  int64_t n = cfg.num_int("paths", 1 << 14);
  MalliavinDerivatives md =
      malliavin_derivatives(payoff, model, cfg.grid, s, eta, n, seed, opt.threads);
  json j;
  j["delta0"] = {{"value", md.delta0.value}, {"stderr", md.delta0.stderr_}, {"n", n}};
  json atoms = json::array();
  for (std::size_t i = 0; i < md.perp.atoms.size(); ++i)
    atoms.push_back({{"lag", md.perp.atom_lags[i]},
                     {"value", md.perp.atoms[i]},
                     {"stderr", md.perp.atom_stderr[i]}});
  j["perp_atoms"] = atoms;
  std::ofstream(dir + "/malliavin.json") << j.dump(2) << "\n";
  manifest.add("malliavin.json", "integration-by-parts derivative estimates", "A8");
  std::ofstream csv(dir + "/perp_density.csv");
  csv << "lag,value,stderr\n";
  for (int64_t k = 0; k <= lags.lags; ++k) {
    double v = md.perp.density.empty() ? 0.0 : md.perp.density[static_cast<std::size_t>(k)];
    double se =
        md.perp.density_stderr.empty() ? 0.0 : md.perp.density_stderr[static_cast<std::size_t>(k)];
    csv << fmt(lags.node(k)) << "," << fmt(v) << "," << fmt(se) << "\n";
  }
  manifest.add("perp_density.csv", "perpendicular derivative density", "A8");
  int failures = 0;
  json ab = assert_block(cfg);
  if (!ab.empty()) {
    double target = ab.value("target", 0.0);
    double max_z = ab.value("max_z", 3.0);
    if (std::abs(md.delta0.value - target) > max_z * md.delta0.stderr_) ++failures;
  }
  return failures;
}

}  // namespace

std::vector<std::string> experiment_kinds() {
  return {"qv-sweep",  "chi-window",     "fukushima", "represent",
          "hedge-mc",  "hedge-pde",      "cross-validate", "malliavin"};
}

std::string validate_experiment_json(const std::string& config_text) {
  json raw;
  try {
    raw = json::parse(config_text);
  } catch (const std::exception& e) {
    Errors errors;
    errors.add("$", std::string("invalid JSON: ") + e.what());
    return errors.to_json();
  }
  return validate_config(raw, nullptr).to_json();
}

RunResult run_experiment_json(const std::string& config_text, const RunOptions& options) {
  RunResult result;
  json raw;
  try {
    raw = json::parse(config_text);
  } catch (const std::exception& e) {
    Errors errors;
    errors.add("$", std::string("invalid JSON: ") + e.what());
    result.error_report_json = errors.to_json();
    return result;
  }
  Config cfg;
  Errors errors = validate_config(raw, &cfg);
  if (!errors.ok()) {
    result.error_report_json = errors.to_json();
    return result;
  }
  result.config_ok = true;
  uint64_t seed = options.seed.value_or(cfg.seed);
  std::string dir = options.out_dir.empty() ? cfg.output : options.out_dir;
  std::filesystem::create_directories(dir);
  Manifest manifest;
  int failures = 0;
  if (cfg.kind == "qv-sweep") failures = run_qv_sweep(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "chi-window") failures = run_chi_window(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "fukushima") failures = run_fukushima(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "represent") failures = run_represent(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "hedge-mc") failures = run_hedge_mc(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "hedge-pde") failures = run_hedge_pde(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "cross-validate")
    failures = run_cross_validate(cfg, options, dir, manifest, seed);
  else if (cfg.kind == "malliavin") failures = run_malliavin(cfg, options, dir, manifest, seed);
  result.numeric_failures = options.assert_mode ? failures : 0;

  json m;
  m["kind"] = cfg.kind;
  m["seed"] = seed;
  m["files"] = manifest.files;
  result.manifest_path = dir + "/manifest.json";
  std::ofstream(result.manifest_path) << m.dump(2) << "\n";
  return result;
}

RunResult run_experiment_file(const std::string& config_path, const RunOptions& options) {
  std::ifstream in(config_path);
  if (!in) {
    RunResult result;
    Errors errors;
    errors.add("$", "cannot open config file '" + config_path + "'");
    result.error_report_json = errors.to_json();
    return result;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return run_experiment_json(buf.str(), options);
}

}  // namespace chivar
