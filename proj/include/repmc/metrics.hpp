#pragma once

#include <vector>

#include "repmc/core.hpp"
#include "repmc/model.hpp"

namespace repmc {

// RBF kernel kappa(x, y) = exp(-|x - y|^2 / (2 sigma^2)). A nonpositive
// bandwidth requests the median heuristic over the pooled pairwise distances
// of both point sets, resolved once per metric evaluation.
struct RbfKernel {
  double bandwidth = 0.0;  // <= 0: median heuristic

  static RbfKernel median_heuristic() { return RbfKernel{0.0}; }
  static RbfKernel with_bandwidth(double sigma) { return RbfKernel{sigma}; }
};

double median_heuristic_bandwidth(const RepresentationBatch& a,
                                  const RepresentationBatch& b);

enum class MmdEstimator {
  VStatistic,  // diagonal terms included, always >= 0
  UStatistic,  // diagonal terms removed, unbiased, may be negative
};

// Squared MMD between the empirical distributions of A and B.
double mmd_squared(const RepresentationBatch& a, const RepresentationBatch& b,
                   const RbfKernel& kernel,
                   MmdEstimator estimator = MmdEstimator::VStatistic);

// d(mmd^2)/d a_i for every point of A; the bandwidth is resolved first and
// held fixed during differentiation.
std::vector<Vec> mmd_squared_grad_points(
    const RepresentationBatch& a, const RepresentationBatch& b,
    const RbfKernel& kernel, MmdEstimator estimator = MmdEstimator::VStatistic);

// Optimal pairing for the uniform equal-mass case: row i of the cost matrix
// is matched to column pairing[i], each pair carrying mass 1/n.
struct TransportPlan {
  std::vector<std::size_t> pairing;
};

struct AssignmentResult {
  TransportPlan plan;
  double total_cost = 0.0;  // sum_i cost(i, pairing[i]), unscaled
};

// Minimum-cost perfect matching on a square cost matrix (O(n^3)).
AssignmentResult solve_assignment(const Matrix& cost);

// Squared 2-Wasserstein distance between equal-size uniform empirical
// measures: (1/n) sum_i |a_i - b_{pi(i)}|^2 under the optimal pairing.
double wasserstein2_squared(const RepresentationBatch& a,
                            const RepresentationBatch& b);
double wasserstein2_squared(const RepresentationBatch& a,
                            const RepresentationBatch& b, TransportPlan& plan);

// d(W2^2)/d a_i = (2/n)(a_i - b_{pi(i)}), holding the optimal plan fixed.
std::vector<Vec> wasserstein2_grad_points(const RepresentationBatch& a,
                                          const RepresentationBatch& b);

enum class DistanceMetric { Mmd, Wasserstein };

// Squared probability-metric distance between the representation
// distributions induced by two parameter vectors on a shared probe batch.
double representation_distance(const ParamVector& theta,
                               const ParamVector& theta_prime,
                               const AdapterModel& model,
                               const FrozenBackbone& backbone, const Matrix& X,
                               DistanceMetric metric,
                               const RbfKernel& kernel = RbfKernel::median_heuristic());

}  // namespace repmc
