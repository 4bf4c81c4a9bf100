#pragma once

#include <string>
#include <vector>

#include "repmc/metrics.hpp"
#include "repmc/potentials.hpp"
#include "repmc/samplers.hpp"

namespace repmc {

// Symmetric pairwise distance matrix over archived samples.
struct DistanceMatrix {
  Matrix entries;                   // S x S, zero diagonal
  std::vector<std::string> labels;  // sample ids, one per row
  std::string metric_tag;

  std::size_t size() const { return entries.rows; }
};

struct ModeCoverageReport {
  std::vector<bool> hit;
  double coverage = 0.0;  // hits / mode count
  double radius = 0.0;
};

struct MomentCheckResult {
  bool pass = false;
  bool mean_pass = false;
  bool variance_pass = false;
  Vec empirical_mean;
  Vec empirical_variance;
  double worst_mean_error = 0.0;       // max |mean_i - target_i|
  double worst_variance_rel = 0.0;     // max |var_i/target_i - 1|
};

// D_ij = metric distance (not squared) between the representation batches of
// samples i and j on one shared probe batch.
DistanceMatrix pairwise_distance_matrix(const SampleArchive& archive,
                                        const AdapterModel& model,
                                        const FrozenBackbone& backbone,
                                        const Matrix& probe,
                                        DistanceMetric metric,
                                        const RbfKernel& kernel =
                                            RbfKernel::median_heuristic());

// Mean of the strict upper triangle.
double mean_offdiagonal(const DistanceMatrix& d);

// Mode k is hit iff some sample lies within radius of its mean.
ModeCoverageReport mode_coverage(const std::vector<ParamVector>& samples,
                                 const GaussianMixture& gm, double radius);

// Scale-aware default: twice the mean component standard deviation.
double default_coverage_radius(const GaussianMixture& gm);

// First/second-moment check of a trajectory tail against a single diagonal
// Gaussian target.
MomentCheckResult moment_check(const std::vector<ParamVector>& tail,
                               const Vec& target_mean, const Vec& target_variance,
                               double mean_tol, double variance_rtol);

}  // namespace repmc
