// Exercises the shared-library surface the CLI is built on.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "chivar/chivar.h"

namespace {

int g_failures = 0;

#define REQUIRE_C(cond)                                                          \
  do {                                                                           \
    if (!(cond)) {                                                               \
      std::fprintf(stderr, "[FAIL] %s:%d: %s\n", __FILE__, __LINE__, #cond);     \
      ++g_failures;                                                              \
    }                                                                            \
  } while (0)

void test_paths_and_curves() {
  chivar_path* p = nullptr;
  std::vector<double> vals = {1.0, 2.0, 3.0};
  REQUIRE_C(chivar_path_create(1.0, 2, vals.data(), &p) == CHIVAR_OK);
  REQUIRE_C(chivar_path_steps(p) == 2);
  REQUIRE_C(chivar_path_value_at(p, -1.0) == 1.0);
  REQUIRE_C(chivar_path_value_at(p, 2.0) == 3.0);
  REQUIRE_C(std::abs(chivar_path_value_at(p, 0.25) - 1.5) < 1e-14);

  chivar_path* bad = nullptr;
  REQUIRE_C(chivar_path_create(-1.0, 2, vals.data(), &bad) == CHIVAR_ERROR_INVALID_ARGUMENT);
  REQUIRE_C(std::strlen(chivar_last_error()) > 0);

  chivar_path* w = nullptr;
  REQUIRE_C(chivar_path_wiener(1.0, 4096, 99, 0, &w) == CHIVAR_OK);
  chivar_curve* c = nullptr;
  REQUIRE_C(chivar_epsilon_covariation(w, w, 16.0 / 4096.0, &c) == CHIVAR_OK);
  REQUIRE_C(chivar_curve_size(c) == 4097);
  std::vector<double> out(4097);
  REQUIRE_C(chivar_curve_values(c, out.data(), 4097) == 4097);
  REQUIRE_C(out.front() == 0.0);
  REQUIRE_C(std::abs(out.back() - 1.0) < 0.25);

  // path csv round trip through the C surface
  auto tmp = std::filesystem::temp_directory_path() / "chivar_capi_path.csv";
  REQUIRE_C(chivar_path_write_csv(w, tmp.string().c_str()) == CHIVAR_OK);
  chivar_path* r = nullptr;
  REQUIRE_C(chivar_path_read_csv(tmp.string().c_str(), &r) == CHIVAR_OK);
  REQUIRE_C(chivar_path_steps(r) == 4096);
  std::filesystem::remove(tmp);

  chivar_curve* cw = nullptr;
  REQUIRE_C(chivar_weighted_bracket(w, w, w, 16.0 / 4096.0, &cw) == CHIVAR_OK);
  chivar_curve_free(cw);

  // eps off the grid is an invalid argument
  chivar_curve* c2 = nullptr;
  REQUIRE_C(chivar_epsilon_covariation(w, w, 0.013, &c2) == CHIVAR_ERROR_INVALID_ARGUMENT);

  double schedule[3] = {1.0 / 16, 1.0 / 64, 1.0 / 256};
  char* report = nullptr;
  REQUIRE_C(chivar_orthogonality_report(w, w, schedule, 3, 0.5, &report) == CHIVAR_OK);
  REQUIRE_C(report != nullptr);
  REQUIRE_C(std::string(report).find("\"verdict\":false") != std::string::npos);
  chivar_string_free(report);

  chivar_curve_free(c);
  chivar_path_free(p);
  chivar_path_free(w);
  chivar_path_free(r);
}

void test_experiment_surface() {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "chivar_capi_exp";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::path config = dir / "config.json";
  {
    std::ofstream out(config);
    out << R"({
      "kind": "qv-sweep",
      "grid": {"horizon": 1.0, "steps": 1024},
      "model": {"name": "wiener"},
      "numeric": {"epsilons": [0.0625, 0.015625], "paths": 4},
      "seed": 12,
      "assert": {"terminal_lo": 0.8, "terminal_hi": 1.2}
    })";
  }
  char* report = nullptr;
  REQUIRE_C(chivar_experiment_validate(config.string().c_str(), &report) == CHIVAR_OK);
  REQUIRE_C(std::string(report).find("\"valid\":true") != std::string::npos);
  chivar_string_free(report);

  chivar_run_options opts;
  opts.out_dir = nullptr;
  opts.has_seed = 0;
  opts.seed = 0;
  opts.threads = 2;
  opts.assert_mode = 1;
  std::string outdir = (dir / "out").string();
  opts.out_dir = outdir.c_str();
  chivar_run_result* result = nullptr;
  REQUIRE_C(chivar_experiment_run(config.string().c_str(), &opts, &result) == CHIVAR_OK);
  REQUIRE_C(chivar_result_numeric_failures(result) == 0);
  REQUIRE_C(fs::exists(chivar_result_manifest_path(result)));
  chivar_result_free(result);

  // malformed config: CONFIG error + machine-readable report
  fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << R"({"kind": "qv-sweep", "grid": {"horizon": 1.0, "steps": 1}})";
  }
  char* bad_report = nullptr;
  REQUIRE_C(chivar_experiment_validate(bad.string().c_str(), &bad_report) == CHIVAR_ERROR_CONFIG);
  REQUIRE_C(std::string(bad_report).find("grid.steps") != std::string::npos);
  chivar_string_free(bad_report);

  chivar_run_result* bad_result = nullptr;
  REQUIRE_C(chivar_experiment_run(bad.string().c_str(), &opts, &bad_result) ==
            CHIVAR_ERROR_CONFIG);
  REQUIRE_C(std::string(chivar_result_error_report(bad_result)).find("\"valid\":false") !=
            std::string::npos);
  chivar_result_free(bad_result);

  fs::remove_all(dir);
}

}  // namespace

int main() {
  REQUIRE_C(std::string(chivar_version()) == "1.0.0");
  test_paths_and_curves();
  test_experiment_surface();
  if (g_failures == 0) {
    std::printf("capi: all checks passed\n");
    return 0;
  }
  std::fprintf(stderr, "capi: %d failure(s)\n", g_failures);
  return 1;
}
