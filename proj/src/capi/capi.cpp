#include "chivar/chivar.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "core/covariation.hpp"
#include "core/experiment.hpp"
#include "core/grid.hpp"
#include "core/representation.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
chivar_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const chivar::degenerate_error& e) {
    set_error(e.what());
    return CHIVAR_ERROR_DEGENERATE;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return CHIVAR_ERROR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    set_error(e.what());
    return CHIVAR_ERROR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct chivar_path {
  chivar::SampledPath path;
};

struct chivar_curve {
  chivar::CovariationCurve curve;
};

struct chivar_run_result {
  chivar::RunResult result;
};

extern "C" {

const char* chivar_version(void) { return "1.0.0"; }

const char* chivar_last_error(void) { return g_last_error.c_str(); }

chivar_status chivar_path_create(double horizon, int64_t steps, const double* values,
                                 chivar_path** out) {
  return guarded([&]() {
    if (!values || !out) throw std::invalid_argument("chivar_path_create: null argument");
    chivar::TimeGrid grid = chivar::build_grid(horizon, steps);
    std::vector<double> v(values, values + steps + 1);
    *out = new chivar_path{chivar::SampledPath(grid, std::move(v))};
    return CHIVAR_OK;
  });
}

chivar_status chivar_path_wiener(double horizon, int64_t steps, uint64_t seed,
                                 uint64_t path_index, chivar_path** out) {
  return guarded([&]() {
    if (!out) throw std::invalid_argument("chivar_path_wiener: null output");
    chivar::TimeGrid grid = chivar::build_grid(horizon, steps);
    *out = new chivar_path{chivar::wiener_path(grid, seed, path_index)};
    return CHIVAR_OK;
  });
}

chivar_status chivar_path_read_csv(const char* file, chivar_path** out) {
  return guarded([&]() {
    if (!file || !out) throw std::invalid_argument("chivar_path_read_csv: null argument");
    *out = new chivar_path{chivar::read_path_csv(file)};
    return CHIVAR_OK;
  });
}

chivar_status chivar_path_write_csv(const chivar_path* path, const char* file) {
  return guarded([&]() {
    if (!path || !file) throw std::invalid_argument("chivar_path_write_csv: null argument");
    chivar::write_path_csv(path->path, file);
    return CHIVAR_OK;
  });
}

int64_t chivar_path_steps(const chivar_path* path) { return path ? path->path.grid.steps : -1; }

double chivar_path_value_at(const chivar_path* path, double t) {
  return path ? chivar::value_at(path->path, t) : 0.0;
}

void chivar_path_free(chivar_path* path) { delete path; }

chivar_status chivar_epsilon_covariation(const chivar_path* x, const chivar_path* y, double eps,
                                         chivar_curve** out) {
  return guarded([&]() {
    if (!x || !y || !out) throw std::invalid_argument("chivar_epsilon_covariation: null argument");
    *out = new chivar_curve{chivar::epsilon_covariation(x->path, y->path, eps)};
    return CHIVAR_OK;
  });
}

chivar_status chivar_weighted_bracket(const chivar_path* h, const chivar_path* x,
                                      const chivar_path* y, double eps, chivar_curve** out) {
  return guarded([&]() {
    if (!h || !x || !y || !out)
      throw std::invalid_argument("chivar_weighted_bracket: null argument");
    *out = new chivar_curve{chivar::weighted_bracket_integral(h->path, x->path, y->path, eps)};
    return CHIVAR_OK;
  });
}

int64_t chivar_curve_size(const chivar_curve* curve) {
  return curve ? static_cast<int64_t>(curve->curve.values.size()) : -1;
}

int64_t chivar_curve_values(const chivar_curve* curve, double* out, int64_t cap) {
  if (!curve || !out || cap < 0) return -1;
  int64_t n = std::min<int64_t>(cap, static_cast<int64_t>(curve->curve.values.size()));
  for (int64_t i = 0; i < n; ++i) out[i] = curve->curve.values[static_cast<std::size_t>(i)];
  return n;
}

double chivar_curve_sup_abs(const chivar_curve* curve) {
  return curve ? curve->curve.sup_abs() : 0.0;
}

chivar_status chivar_curve_write_csv(const chivar_curve* curve, const char* file) {
  return guarded([&]() {
    if (!curve || !file) throw std::invalid_argument("chivar_curve_write_csv: null argument");
    chivar::write_curve_csv(curve->curve, file);
    return CHIVAR_OK;
  });
}

void chivar_curve_free(chivar_curve* curve) { delete curve; }

chivar_status chivar_orthogonality_report(const chivar_path* a, const chivar_path* n,
                                          const double* schedule, int64_t schedule_len,
                                          double threshold, char** report_json) {
  return guarded([&]() {
    if (!a || !n || !schedule || schedule_len < 1 || !report_json)
      throw std::invalid_argument("chivar_orthogonality_report: null argument");
    std::vector<double> sched(schedule, schedule + schedule_len);
    chivar::OrthoReport report =
        chivar::orthogonality_diagnostic(a->path, n->path, sched, threshold);
    *report_json = dup_string(chivar::ortho_report_json(report));
    return CHIVAR_OK;
  });
}

chivar_status chivar_experiment_validate(const char* config_path, char** report_json) {
  return guarded([&]() -> chivar_status {
    if (!config_path) throw std::invalid_argument("chivar_experiment_validate: null path");
    std::string text;
    {
      FILE* f = std::fopen(config_path, "rb");
      if (!f) {
        if (report_json)
          *report_json = dup_string(
              "{\"valid\":false,\"errors\":[{\"field\":\"$\",\"message\":\"cannot open config\"}]}");
        set_error("cannot open config file");
        return CHIVAR_ERROR_IO;
      }
      char buf[4096];
      std::size_t got;
      while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, got);
      std::fclose(f);
    }
    std::string report = chivar::validate_experiment_json(text);
    if (report_json) *report_json = dup_string(report);
    bool valid = report.find("\"valid\":true") != std::string::npos;
    if (!valid) set_error("config validation failed");
    return valid ? CHIVAR_OK : CHIVAR_ERROR_CONFIG;
  });
}

chivar_status chivar_experiment_run(const char* config_path, const chivar_run_options* options,
                                    chivar_run_result** out) {
  return guarded([&]() -> chivar_status {
    if (!config_path || !out) throw std::invalid_argument("chivar_experiment_run: null argument");
    chivar::RunOptions opts;
    if (options) {
      if (options->out_dir) opts.out_dir = options->out_dir;
      if (options->has_seed) opts.seed = options->seed;
      opts.threads = options->threads;
      opts.assert_mode = options->assert_mode != 0;
    }
    chivar::RunResult r = chivar::run_experiment_file(config_path, opts);
    *out = new chivar_run_result{r};
    if (!r.config_ok) {
      set_error("config validation failed");
      return CHIVAR_ERROR_CONFIG;
    }
    if (r.numeric_failures > 0) {
      set_error("numeric acceptance thresholds failed");
      return CHIVAR_ERROR_NUMERIC_ASSERT;
    }
    return CHIVAR_OK;
  });
}

int chivar_result_numeric_failures(const chivar_run_result* result) {
  return result ? result->result.numeric_failures : -1;
}

const char* chivar_result_manifest_path(const chivar_run_result* result) {
  return result ? result->result.manifest_path.c_str() : "";
}

const char* chivar_result_error_report(const chivar_run_result* result) {
  return result ? result->result.error_report_json.c_str() : "";
}

void chivar_result_free(chivar_run_result* result) { delete result; }

void chivar_string_free(char* s) { std::free(s); }

}  // extern "C"
