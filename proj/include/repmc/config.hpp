#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "repmc/model.hpp"
#include "repmc/potentials.hpp"
#include "repmc/samplers.hpp"

namespace repmc {

enum class TaskKind { Toy2d, SyntheticClassifier };
enum class AlgorithmChoice { Sgld, Sghmc, Rcsghmc, Map };

struct TaskConfig {
  TaskKind kind = TaskKind::Toy2d;
  // toy2d
  GaussianMixture mixture;
  ParamVector init;
  // synthetic-classifier
  TaskParams params;
  double prior_precision = 5e-4;
  double init_scale = 0.05;
  std::size_t batch_size = 16;
};

struct SamplerBlock {
  AlgorithmChoice algorithm = AlgorithmChoice::Rcsghmc;
  std::size_t cycles = 3;
  std::size_t iters_per_cycle = 400;
  double beta = 0.7;
  double step_size = 2e-3;
  double friction = 0.1;
  double gamma_hat = 0.0;
  std::size_t chains = 1;
  BurnIn burnin = BurnIn::None;
  std::optional<double> burnin_fraction;
  bool momentum_reset = true;
};

struct AblateBlock {
  std::string sweep;  // xi | cycles | repulsion_batch
  std::vector<double> values;
};

struct DiversityBlock {
  std::size_t probe_size = 100;
};

struct ExperimentConfig {
  TaskConfig task;
  SamplerBlock sampler;
  RepulsionConfig repulsion;
  std::string output_dir = "out";
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  AblateBlock ablate;
  DiversityBlock diversity;

  CyclicalSchedule schedule() const;
  SghmcConfig sghmc() const;
};

// Parse + validate a config document. Unknown keys are rejected with their
// full path; semantic violations raise ConfigError with the offending key.
ExperimentConfig parse_config(const std::string& json_text);

// Default-filled, round-trippable form of the config.
std::string effective_config_json(const ExperimentConfig& cfg);

}  // namespace repmc
