#include "repmc/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace repmc {

void PotentialSpec::validate() const {
  require(prior_precision >= 0.0, "PotentialSpec: prior precision must be >= 0");
  if (kind == PotentialKind::Classifier) {
    require(dataset_size >= 1, "PotentialSpec: classifier needs dataset size >= 1");
  }
}

void GaussianMixture::validate() const {
  require(!means.empty(), "GaussianMixture: needs at least one component");
  require(variances.size() == means.size() && weights.size() == means.size(),
          "GaussianMixture: component count mismatch");
  std::size_t d = means.front().size();
  double wsum = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    require(means[k].size() == d && variances[k].size() == d,
            "GaussianMixture: all components must share one dimension");
    for (double v : variances[k]) {
      require(v > 0.0, "GaussianMixture: variances must be positive");
    }
    require(weights[k] >= 0.0, "GaussianMixture: weights must be nonnegative");
    wsum += weights[k];
  }
  require(std::abs(wsum - 1.0) <= 1e-12, "GaussianMixture: weights must sum to 1");
}

namespace {

// log w_k + log N(theta | mu_k, diag(var_k))
double component_log_density(const GaussianMixture& gm, std::size_t k,
                             const ParamVector& theta) {
  double quad = 0.0;
  double logdet = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double diff = theta[i] - gm.means[k][i];
    quad += diff * diff / gm.variances[k][i];
    logdet += std::log(gm.variances[k][i]);
  }
  double d = static_cast<double>(theta.size());
  return std::log(gm.weights[k]) -
         0.5 * (quad + logdet + d * std::log(2.0 * std::numbers::pi));
}

}  // namespace

double mixture_potential(const GaussianMixture& gm, const ParamVector& theta) {
  gm.validate();
  require(theta.size() == gm.dim(), "mixture_potential: dimension mismatch");

  // -logsumexp over component log densities.
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(gm.components());
  for (std::size_t k = 0; k < gm.components(); ++k) {
    logs[k] = component_log_density(gm, k, theta);
    max_log = std::max(max_log, logs[k]);
  }
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - max_log);
  return -(max_log + std::log(acc));
}

Vec mixture_potential_grad(const GaussianMixture& gm, const ParamVector& theta) {
  gm.validate();
  require(theta.size() == gm.dim(), "mixture_potential_grad: dimension mismatch");

  // grad U = sum_k r_k * Sigma_k^{-1} (theta - mu_k), with responsibilities
  // r_k computed stably in log space.
  std::vector<double> logs(gm.components());
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gm.components(); ++k) {
    logs[k] = component_log_density(gm, k, theta);
    max_log = std::max(max_log, logs[k]);
  }
  double denom = 0.0;
  for (double l : logs) denom += std::exp(l - max_log);

  Vec grad(theta.size(), 0.0);
  for (std::size_t k = 0; k < gm.components(); ++k) {
    double resp = std::exp(logs[k] - max_log) / denom;
    if (resp == 0.0) continue;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      grad[i] += resp * (theta[i] - gm.means[k][i]) / gm.variances[k][i];
    }
  }
  return grad;
}

double minibatch_potential(const PotentialSpec& spec, const ExampleNll& nll,
                           const MiniBatch& batch, const ParamVector& theta) {
  spec.validate();
  require(!batch.indices.empty(), "minibatch_potential: empty batch");
  double n = static_cast<double>(spec.dataset_size);
  double m = static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t i : batch.indices) {
    require(i < spec.dataset_size, "minibatch_potential: index out of range");
    loss += nll(i, theta);
  }
  return (n / m) * loss + 0.5 * spec.prior_precision * squared_norm(theta);
}

Vec minibatch_potential_grad(const PotentialSpec& spec,
                             const ExampleNllGrad& nll_grad,
                             const MiniBatch& batch, const ParamVector& theta) {
  spec.validate();
  require(!batch.indices.empty(), "minibatch_potential_grad: empty batch");
  double n = static_cast<double>(spec.dataset_size);
  double m = static_cast<double>(batch.size());
  Vec grad(theta.size(), 0.0);
  for (std::size_t i : batch.indices) {
    require(i < spec.dataset_size, "minibatch_potential_grad: index out of range");
    Vec g = nll_grad(i, theta);
    require(g.size() == theta.size(), "minibatch_potential_grad: gradient size mismatch");
    axpy(1.0, g, grad);
  }
  for (double& g : grad) g *= n / m;
  axpy(spec.prior_precision, theta, grad);
  return grad;
}

MixturePotential::MixturePotential(GaussianMixture gm) : gm_(std::move(gm)) {
  gm_.validate();
}

double MixturePotential::value(const ParamVector& theta) const {
  return mixture_potential(gm_, theta);
}

Vec MixturePotential::grad(const ParamVector& theta) const {
  return mixture_potential_grad(gm_, theta);
}

double MixturePotential::minibatch_value(const ParamVector& theta,
                                         const MiniBatch&) const {
  return value(theta);
}

Vec MixturePotential::minibatch_grad(const ParamVector& theta,
                                     const MiniBatch&) const {
  return grad(theta);
}

}  // namespace repmc
