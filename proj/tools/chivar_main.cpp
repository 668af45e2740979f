// chivar CLI: experiment runner over the C API.
//
//   chivar run <config.json> [--out DIR] [--seed S] [--threads N] [--assert]
//   chivar validate <config.json>
//
// Exit status: 0 ok, 1 numeric-acceptance failure (--assert), 2 config or
// usage error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "chivar/chivar.h"

namespace {

void usage() {
  std::fprintf(stderr,
               "usage:\n"
               "  chivar run <config.json> [--out DIR] [--seed S] [--threads N] [--assert]\n"
               "  chivar validate <config.json>\n");
}

int cmd_validate(const char* config) {
  char* report = nullptr;
  chivar_status st = chivar_experiment_validate(config, &report);
  if (report) {
    std::printf("%s\n", report);
    chivar_string_free(report);
  }
  if (st == CHIVAR_OK) return 0;
  return 2;
}

int cmd_run(int argc, char** argv) {
  const char* config = argv[0];
  chivar_run_options opts;
  opts.out_dir = nullptr;
  opts.has_seed = 0;
  opts.seed = 0;
  opts.threads = 1;
  opts.assert_mode = 0;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--out" && i + 1 < argc) {
      opts.out_dir = argv[++i];
    } else if (arg == "--seed" && i + 1 < argc) {
      opts.has_seed = 1;
      opts.seed = std::strtoull(argv[++i], nullptr, 10);
    } else if (arg == "--threads" && i + 1 < argc) {
      opts.threads = std::atoi(argv[++i]);
    } else if (arg == "--assert") {
      opts.assert_mode = 1;
    } else {
      std::fprintf(stderr, "unknown argument: %s\n", arg.c_str());
      usage();
      return 2;
    }
  }
  chivar_run_result* result = nullptr;
  chivar_status st = chivar_experiment_run(config, &opts, &result);
  int code = 2;
  if (st == CHIVAR_OK) {
    std::printf("ok: manifest at %s\n", chivar_result_manifest_path(result));
    code = 0;
  } else if (st == CHIVAR_ERROR_NUMERIC_ASSERT) {
    std::fprintf(stderr, "numeric acceptance failed (%d threshold(s)); manifest at %s\n",
                 chivar_result_numeric_failures(result), chivar_result_manifest_path(result));
    code = 1;
  } else if (st == CHIVAR_ERROR_CONFIG) {
    const char* report = result ? chivar_result_error_report(result) : "";
    std::fprintf(stderr, "%s\n", report && report[0] ? report : chivar_last_error());
    code = 2;
  } else {
    std::fprintf(stderr, "error: %s\n", chivar_last_error());
    code = 2;
  }
  chivar_result_free(result);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    usage();
    return 2;
  }
  std::string cmd = argv[1];
  if (cmd == "validate") return cmd_validate(argv[2]);
  if (cmd == "run") return cmd_run(argc - 2, argv + 2);
  usage();
  return 2;
}
