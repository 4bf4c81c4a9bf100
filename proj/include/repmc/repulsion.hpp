#pragma once

#include <optional>
#include <vector>

#include "repmc/core.hpp"
#include "repmc/metrics.hpp"
#include "repmc/model.hpp"

namespace repmc {

enum class RepulsionMode { ParameterEuclidean, Representation };

struct RepulsionConfig {
  double strength = 1e-3;  // xi >= 0
  double epsilon = 1e-6;   // > 0
  RepulsionMode mode = RepulsionMode::ParameterEuclidean;
  DistanceMetric metric = DistanceMetric::Mmd;  // representation mode
  std::size_t probe_batch_size = 32;            // representation mode, >= 2
  double mmd_sigma = 0.0;                       // <= 0: median heuristic

  void validate() const;
};

// Frozen previous-cycle end parameters the current cycle repels from, with
// representations on the current probe batch cached once per cycle.
struct SnapshotSet {
  std::vector<ParamVector> parameters;
  std::vector<RepresentationBatch> representations;  // representation mode

  std::size_t size() const { return parameters.size(); }
  bool empty() const { return parameters.empty(); }
};

// Model pieces and probe batch needed to evaluate representation-space
// distances; unused in parameter mode.
struct RepulsionContext {
  const AdapterModel* model = nullptr;
  const FrozenBackbone* backbone = nullptr;
  Matrix probe_inputs;
};

// V(theta, theta') = 1 / (d^2 + epsilon), where d is the configured distance.
double repulsive_potential(const ParamVector& theta,
                           const ParamVector& theta_prime,
                           const RepulsionConfig& cfg,
                           const RepulsionContext* ctx = nullptr);

// F(theta, theta') = -grad_theta V = (grad_theta d^2) / (d^2 + epsilon)^2.
// In representation mode the metric point-gradients are pulled back through
// the model; a cached representation of theta' avoids recomputing it.
Vec repulsive_force(const ParamVector& theta, const ParamVector& theta_prime,
                    const RepulsionConfig& cfg,
                    const RepulsionContext* ctx = nullptr,
                    const RepresentationBatch* cached_prime = nullptr);

// xi * sum_l F(theta, theta_l) over the snapshot set; the zero vector when
// the set is empty (first cycle) or xi = 0.
Vec total_repulsion(const ParamVector& theta, const SnapshotSet& snapshots,
                    const RepulsionConfig& cfg,
                    const RepulsionContext* ctx = nullptr);

}  // namespace repmc
