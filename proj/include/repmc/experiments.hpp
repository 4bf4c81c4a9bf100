#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repmc/config.hpp"

namespace repmc {

struct ExperimentOptions {
  std::string outdir_override;               // empty: take config output.dir
  std::vector<std::uint64_t> seeds_override;  // empty: take config seeds
  int jobs = 1;                               // parallel runs in a sweep
};

// Executes one of the experiment commands (toy2d, ablate, diversity,
// ensemble-eval), writes the run artifacts under the output directory, and
// returns the experiment-level report as a JSON string. Re-running with the
// same config and seeds reproduces every output file byte-identically.
std::string run_experiment(const ExperimentConfig& cfg,
                           const std::string& command,
                           const ExperimentOptions& options = {});

}  // namespace repmc
