// Experiment runner CLI. Talks to the sampler library exclusively through
// the C API in repmc/repmc.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repmc/repmc.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

int exit_code_for(repmc_status status) {
  switch (status) {
    case REPMC_OK: return kExitOk;
    case REPMC_ERR_CONFIG: return kExitConfig;
    case REPMC_ERR_DIVERGED: return kExitDiverged;
    default: return kExitFailure;
  }
}

int fail(repmc_status status) {
  std::cerr << "error: " << repmc_last_error() << "\n";
  return exit_code_for(status);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

struct ExperimentHandle {
  repmc_experiment* ptr = nullptr;
  ~ExperimentHandle() { repmc_experiment_free(ptr); }
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { repmc_string_free(ptr); }
};

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    seeds.push_back(std::stoull(item));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repmc: repulsive cyclical SGHMC experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string outdir;
  std::string seeds_text;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "path to a JSON config")
        ->required();
    cmd->add_option("--outdir", outdir, "output directory (overrides config)");
    cmd->add_option("--seeds", seeds_text,
                    "comma-separated seed list, e.g. 1,2,3 (overrides config)");
    cmd->add_option("--jobs", jobs, "parallel runs in a sweep")
        ->check(CLI::PositiveNumber);
  };

  const char* commands[] = {"toy2d", "ablate", "diversity", "ensemble-eval"};
  for (const char* name : commands) {
    add_common(app.add_subcommand(name));
  }
  CLI::App* validate = app.add_subcommand(
      "validate-config", "parse a config and print its default-filled form");
  validate->add_option("--config", config_path, "path to a JSON config")
      ->required();

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();

  std::string config_text;
  if (!read_file(config_path, config_text)) {
    std::cerr << "error: cannot read config file " << config_path << "\n";
    return kExitConfig;
  }

  ExperimentHandle handle;
  repmc_status status = repmc_experiment_create(config_text.c_str(), &handle.ptr);
  if (status != REPMC_OK) return fail(status);

  if (command == "validate-config") {
    OwnedString effective;
    status = repmc_experiment_effective_config(handle.ptr, &effective.ptr);
    if (status != REPMC_OK) return fail(status);
    std::cout << effective.ptr << "\n";
    return kExitOk;
  }

  if (!outdir.empty()) {
    status = repmc_experiment_set_outdir(handle.ptr, outdir.c_str());
    if (status != REPMC_OK) return fail(status);
  }
  if (!seeds_text.empty()) {
    std::vector<std::uint64_t> seeds;
    try {
      seeds = parse_seed_list(seeds_text);
    } catch (const std::exception&) {
      std::cerr << "error: --seeds expects a comma-separated integer list\n";
      return kExitConfig;
    }
    if (seeds.empty()) {
      std::cerr << "error: --seeds expects a comma-separated integer list\n";
      return kExitConfig;
    }
    status = repmc_experiment_set_seeds(handle.ptr, seeds.data(), seeds.size());
    if (status != REPMC_OK) return fail(status);
  }
  if (jobs > 1) {
    status = repmc_experiment_set_jobs(handle.ptr, jobs);
    if (status != REPMC_OK) return fail(status);
  }

  OwnedString report;
  status = repmc_experiment_run(handle.ptr, command.c_str(), &report.ptr);
  if (status != REPMC_OK) return fail(status);
  std::cout << report.ptr;
  return kExitOk;
}
