#include "repmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace repmc {

DistanceMatrix pairwise_distance_matrix(const SampleArchive& archive,
                                        const AdapterModel& model,
                                        const FrozenBackbone& backbone,
                                        const Matrix& probe,
                                        DistanceMetric metric,
                                        const RbfKernel& kernel) {
  std::vector<ParamVector> samples = archive.all_samples();
  require(samples.size() >= 2,
          "pairwise_distance_matrix: need at least two archived samples");
  require(probe.rows >= 1, "pairwise_distance_matrix: empty probe batch");

  std::vector<RepresentationBatch> reps(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    reps[i] = represent(model, backbone, probe, samples[i]);
  }

  DistanceMatrix dm;
  dm.metric_tag = metric == DistanceMetric::Mmd ? "mmd" : "wasserstein";
  dm.entries = Matrix(samples.size(), samples.size());
  dm.labels.resize(samples.size());
  std::size_t s = 0;
  for (std::size_t c = 0; c < archive.cycles.size(); ++c) {
    for (std::size_t k = 0; k < archive.chains; ++k) {
      dm.labels[s++] = "c" + std::to_string(c + 1) + "_k" + std::to_string(k);
    }
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      double sq = metric == DistanceMetric::Mmd
                      ? mmd_squared(reps[i], reps[j], kernel)
                      : wasserstein2_squared(reps[i], reps[j]);
      double d = std::sqrt(std::max(sq, 0.0));
      dm.entries.at(i, j) = d;
      dm.entries.at(j, i) = d;
    }
  }
  return dm;
}

double mean_offdiagonal(const DistanceMatrix& d) {
  require(d.size() >= 2, "mean_offdiagonal: need at least a 2x2 matrix");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      sum += d.entries.at(i, j);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

ModeCoverageReport mode_coverage(const std::vector<ParamVector>& samples,
                                 const GaussianMixture& gm, double radius) {
  gm.validate();
  require(radius > 0.0, "mode_coverage: radius must be positive");
  for (const ParamVector& s : samples) {
    require(s.size() == gm.dim(), "mode_coverage: dimension mismatch");
  }

  ModeCoverageReport rep;
  rep.radius = radius;
  rep.hit.assign(gm.components(), false);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < gm.components(); ++k) {
    for (const ParamVector& s : samples) {
      if (norm(sub(s, gm.means[k])) < radius) {
        rep.hit[k] = true;
        ++hits;
        break;
      }
    }
  }
  rep.coverage = static_cast<double>(hits) / static_cast<double>(gm.components());
  return rep;
}

double default_coverage_radius(const GaussianMixture& gm) {
  gm.validate();
  double acc = 0.0;
  std::size_t count = 0;
  for (const Vec& var : gm.variances) {
    for (double v : var) {
      acc += std::sqrt(v);
      ++count;
    }
  }
  return 2.0 * acc / static_cast<double>(count);
}

MomentCheckResult moment_check(const std::vector<ParamVector>& tail,
                               const Vec& target_mean, const Vec& target_variance,
                               double mean_tol, double variance_rtol) {
  require(tail.size() >= 1000, "moment_check: tail must hold at least 1000 samples");
  std::size_t d = target_mean.size();
  require(target_variance.size() == d, "moment_check: target size mismatch");
  for (const ParamVector& s : tail) {
    require(s.size() == d, "moment_check: sample dimension mismatch");
  }

  MomentCheckResult res;
  res.empirical_mean.assign(d, 0.0);
  res.empirical_variance.assign(d, 0.0);
  double n = static_cast<double>(tail.size());
  for (const ParamVector& s : tail) axpy(1.0 / n, s, res.empirical_mean);
  for (const ParamVector& s : tail) {
    for (std::size_t i = 0; i < d; ++i) {
      double diff = s[i] - res.empirical_mean[i];
      res.empirical_variance[i] += diff * diff / n;
    }
  }

  res.mean_pass = true;
  res.variance_pass = true;
  for (std::size_t i = 0; i < d; ++i) {
    double me = std::abs(res.empirical_mean[i] - target_mean[i]);
    res.worst_mean_error = std::max(res.worst_mean_error, me);
    if (me > mean_tol) res.mean_pass = false;
    require(target_variance[i] > 0.0, "moment_check: target variance must be positive");
    double vr = std::abs(res.empirical_variance[i] / target_variance[i] - 1.0);
    res.worst_variance_rel = std::max(res.worst_variance_rel, vr);
    if (vr > variance_rtol) res.variance_pass = false;
  }
  res.pass = res.mean_pass && res.variance_pass;
  return res;
}

}  // namespace repmc
