#include "core/covariation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace chivar {

double CovariationCurve::sup_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double sup_distance(const CovariationCurve& a, const CovariationCurve& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("sup_distance: grid mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

int64_t epsilon_steps(const SampledPath& x, const SampledPath& y, double eps) {
  if (!(x.grid == y.grid))
    throw std::invalid_argument("epsilon_covariation: paths on different grids");
  int64_t k = snap_to_step(eps, x.grid.dt());
  if (k < 1 || k > x.grid.steps)
    throw std::invalid_argument("epsilon_covariation: eps must be k*dt with 1 <= k <= M");
  return k;
}

namespace {

template <typename Weight>
CovariationCurve accumulate_curve(const SampledPath& x, const SampledPath& y, double eps,
                                  Weight&& weight) {
  int64_t k = epsilon_steps(x, y, eps);
  double eff_eps = static_cast<double>(k) * x.grid.dt();
  CovariationCurve curve;
  curve.grid = x.grid;
  curve.epsilon = eff_eps;
  curve.values.resize(static_cast<std::size_t>(x.grid.nodes()));
  curve.values[0] = 0.0;
  double scale = x.grid.dt() / eff_eps;
  double acc = 0.0;
  for (int64_t j = 0; j < x.grid.steps; ++j) {
    double dx = x.at_step(j + k) - x.values[static_cast<std::size_t>(j)];
    double dy = y.at_step(j + k) - y.values[static_cast<std::size_t>(j)];
    acc += weight(j) * dx * dy * scale;
    curve.values[static_cast<std::size_t>(j + 1)] = acc;
  }
  return curve;
}

}  // namespace

CovariationCurve epsilon_covariation(const SampledPath& x, const SampledPath& y, double eps) {
  return accumulate_curve(x, y, eps, [](int64_t) { return 1.0; });
}

CovariationCurve weighted_bracket_integral(const SampledPath& h, const SampledPath& x,
                                           const SampledPath& y, double eps) {
  if (!(h.grid == x.grid))
    throw std::invalid_argument("weighted_bracket_integral: weight on a different grid");
  return accumulate_curve(x, y, eps,
                          [&h](int64_t j) { return h.values[static_cast<std::size_t>(j)]; });
}

OrthoReport orthogonality_diagnostic(const SampledPath& a, const SampledPath& n,
                                     const std::vector<double>& schedule, double threshold) {
  if (schedule.empty())
    throw std::invalid_argument("orthogonality_diagnostic: empty schedule");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] < schedule[i - 1]))
      throw std::invalid_argument("orthogonality_diagnostic: schedule must decrease");
  OrthoReport report;
  report.schedule = schedule;
  for (double eps : schedule)
    report.sup_norms.push_back(epsilon_covariation(a, n, eps).sup_abs());
  bool decays = true;
  for (std::size_t i = 1; i < report.sup_norms.size(); ++i)
    if (report.sup_norms[i] > kOrthoDecaySlack * report.sup_norms[i - 1]) decays = false;
  report.verdict = decays && report.sup_norms.back() <= threshold;
  return report;
}

std::string ortho_report_json(const OrthoReport& report) {
  std::ostringstream out;
  char buf[40];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "{\"schedule\":[";
  for (std::size_t i = 0; i < report.schedule.size(); ++i)
    out << (i ? "," : "") << num(report.schedule[i]);
  out << "],\"sup_norms\":[";
  for (std::size_t i = 0; i < report.sup_norms.size(); ++i)
    out << (i ? "," : "") << num(report.sup_norms[i]);
  out << "],\"verdict\":" << (report.verdict ? "true" : "false") << "}";
  return out.str();
}

void write_curve_csv(const CovariationCurve& curve, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_curve_csv: cannot open " + file);
  out << "t,estimate\n";
  char buf[64];
  for (int64_t k = 0; k <= curve.grid.steps; ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", curve.grid.node(k),
                  curve.values[static_cast<std::size_t>(k)]);
    out << buf;
  }
}

}  // namespace chivar
