#include "repmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace repmc {

namespace {

constexpr double kBandwidthFloor = 1e-12;

void check_batches(const RepresentationBatch& a, const RepresentationBatch& b,
                   const char* op) {
  require(a.size() >= 1 && b.size() >= 1,
          std::string(op) + ": batches must be nonempty");
  require(a.dim() == b.dim(), std::string(op) + ": dimension mismatch");
}

double sq_dist(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double resolve_bandwidth(const RepresentationBatch& a,
                         const RepresentationBatch& b, const RbfKernel& kernel) {
  double sigma =
      kernel.bandwidth > 0.0 ? kernel.bandwidth : median_heuristic_bandwidth(a, b);
  return std::max(sigma, kBandwidthFloor);
}

}  // namespace

double median_heuristic_bandwidth(const RepresentationBatch& a,
                                  const RepresentationBatch& b) {
  check_batches(a, b, "median_heuristic_bandwidth");
  std::vector<const Vec*> pool;
  pool.reserve(a.size() + b.size());
  for (const Vec& p : a.points) pool.push_back(&p);
  for (const Vec& p : b.points) pool.push_back(&p);

  std::vector<double> dists;
  dists.reserve(pool.size() * (pool.size() - 1) / 2);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      dists.push_back(std::sqrt(sq_dist(*pool[i], *pool[j])));
    }
  }
  if (dists.empty()) return kBandwidthFloor;
  std::sort(dists.begin(), dists.end());
  std::size_t n = dists.size();
  double median = (n % 2 == 1) ? dists[n / 2]
                               : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
  return std::max(median, kBandwidthFloor);
}

double mmd_squared(const RepresentationBatch& a, const RepresentationBatch& b,
                   const RbfKernel& kernel, MmdEstimator estimator) {
  check_batches(a, b, "mmd_squared");
  if (estimator == MmdEstimator::UStatistic) {
    require(a.size() >= 2 && b.size() >= 2,
            "mmd_squared: U-statistic needs at least two points per batch");
  }
  double sigma = resolve_bandwidth(a, b, kernel);
  double inv = 1.0 / (2.0 * sigma * sigma);
  auto kappa = [&](const Vec& x, const Vec& y) {
    return std::exp(-sq_dist(x, y) * inv);
  };

  double n = static_cast<double>(a.size());
  double m = static_cast<double>(b.size());

  double aa = 0.0, bb = 0.0, ab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (estimator == MmdEstimator::UStatistic && i == j) continue;
      aa += kappa(a.points[i], a.points[j]);
    }
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (estimator == MmdEstimator::UStatistic && i == j) continue;
      bb += kappa(b.points[i], b.points[j]);
    }
  }
  for (const Vec& x : a.points) {
    for (const Vec& y : b.points) ab += kappa(x, y);
  }

  if (estimator == MmdEstimator::VStatistic) {
    return aa / (n * n) + bb / (m * m) - 2.0 * ab / (n * m);
  }
  return aa / (n * (n - 1.0)) + bb / (m * (m - 1.0)) - 2.0 * ab / (n * m);
}

std::vector<Vec> mmd_squared_grad_points(const RepresentationBatch& a,
                                         const RepresentationBatch& b,
                                         const RbfKernel& kernel,
                                         MmdEstimator estimator) {
  check_batches(a, b, "mmd_squared_grad_points");
  double sigma = resolve_bandwidth(a, b, kernel);
  double inv = 1.0 / (2.0 * sigma * sigma);
  double inv_s2 = 1.0 / (sigma * sigma);
  auto kappa = [&](const Vec& x, const Vec& y) {
    return std::exp(-sq_dist(x, y) * inv);
  };

  double n = static_cast<double>(a.size());
  double m = static_cast<double>(b.size());
  double self_norm = estimator == MmdEstimator::VStatistic
                         ? 1.0 / (n * n)
                         : 1.0 / (n * (n - 1.0));

  std::size_t dim = a.dim();
  std::vector<Vec> grads(a.size(), Vec(dim, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    Vec& g = grads[i];
    // Within-A term: both argument slots of the symmetric kernel contribute.
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (j == i) continue;
      double k = kappa(a.points[i], a.points[j]);
      double coef = -2.0 * self_norm * k * inv_s2;
      for (std::size_t d = 0; d < dim; ++d) {
        g[d] += coef * (a.points[i][d] - a.points[j][d]);
      }
    }
    // Cross term.
    for (std::size_t j = 0; j < b.size(); ++j) {
      double k = kappa(a.points[i], b.points[j]);
      double coef = (2.0 / (n * m)) * k * inv_s2;
      for (std::size_t d = 0; d < dim; ++d) {
        g[d] += coef * (a.points[i][d] - b.points[j][d]);
      }
    }
  }
  return grads;
}

AssignmentResult solve_assignment(const Matrix& cost) {
  require(cost.rows == cost.cols && cost.rows > 0,
          "solve_assignment: cost matrix must be square and nonempty");
  for (double v : cost.values) {
    require(std::isfinite(v), "solve_assignment: cost entries must be finite");
  }

  // Shortest augmenting paths with dual potentials (Jonker-Volgenant style),
  // 1-based internal indexing.
  std::size_t n = cost.rows;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      std::size_t i0 = match[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult result;
  result.plan.pairing.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    result.plan.pairing[match[j] - 1] = j - 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    result.total_cost += cost.at(i, result.plan.pairing[i]);
  }
  return result;
}

double wasserstein2_squared(const RepresentationBatch& a,
                            const RepresentationBatch& b) {
  TransportPlan plan;
  return wasserstein2_squared(a, b, plan);
}

double wasserstein2_squared(const RepresentationBatch& a,
                            const RepresentationBatch& b, TransportPlan& plan) {
  check_batches(a, b, "wasserstein2_squared");
  if (a.size() != b.size()) {
    throw InvalidArgumentError(
        "wasserstein2_squared: unequal batch sizes are unsupported (uniform "
        "equal-mass marginals only)");
  }
  std::size_t n = a.size();
  Matrix cost(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cost.at(i, j) = sq_dist(a.points[i], b.points[j]);
    }
  }
  AssignmentResult res = solve_assignment(cost);
  plan = std::move(res.plan);
  return res.total_cost / static_cast<double>(n);
}

std::vector<Vec> wasserstein2_grad_points(const RepresentationBatch& a,
                                          const RepresentationBatch& b) {
  TransportPlan plan;
  wasserstein2_squared(a, b, plan);
  // Envelope rule: the plan is held fixed, so only the matched squared
  // distances differentiate.
  double inv_n = 1.0 / static_cast<double>(a.size());
  std::vector<Vec> grads(a.size(), Vec(a.dim(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec& bi = b.points[plan.pairing[i]];
    for (std::size_t d = 0; d < a.dim(); ++d) {
      grads[i][d] = 2.0 * inv_n * (a.points[i][d] - bi[d]);
    }
  }
  return grads;
}

double representation_distance(const ParamVector& theta,
                               const ParamVector& theta_prime,
                               const AdapterModel& model,
                               const FrozenBackbone& backbone, const Matrix& X,
                               DistanceMetric metric, const RbfKernel& kernel) {
  require(X.rows >= 1, "representation_distance: empty probe batch");
  RepresentationBatch ua = represent(model, backbone, X, theta);
  RepresentationBatch ub = represent(model, backbone, X, theta_prime);
  if (metric == DistanceMetric::Mmd) {
    return mmd_squared(ua, ub, kernel);
  }
  return wasserstein2_squared(ua, ub);
}

}  // namespace repmc
