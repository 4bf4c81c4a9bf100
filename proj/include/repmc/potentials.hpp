#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "repmc/core.hpp"

namespace repmc {

enum class PotentialKind { GaussianMixture, Classifier };

// Shape of a potential U(theta) = -log p(D|theta) - log p(theta). The prior
// is isotropic Gaussian with precision lambda, which plays the role of weight
// decay; dataset_size is the n the mini-batch estimator rescales to.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::GaussianMixture;
  double prior_precision = 0.0;  // lambda >= 0
  std::size_t dataset_size = 1;  // n >= 1 for classifier kind

  void validate() const;
};

// Diagonal-covariance Gaussian mixture; the analytic target of the toy runs.
struct GaussianMixture {
  std::vector<Vec> means;
  std::vector<Vec> variances;  // diagonal entries, all > 0
  Vec weights;                 // simplex

  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t components() const { return means.size(); }
  void validate() const;
};

struct MiniBatch {
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
};

// U(theta) = -log sum_k w_k N(theta | mu_k, Sigma_k), so that Langevin-type
// samplers have the mixture itself as their stationary distribution.
double mixture_potential(const GaussianMixture& gm, const ParamVector& theta);
Vec mixture_potential_grad(const GaussianMixture& gm, const ParamVector& theta);

// Per-example negative log-likelihood, evaluated at dataset row i.
using ExampleNll = std::function<double(std::size_t, const ParamVector&)>;
using ExampleNllGrad = std::function<Vec(std::size_t, const ParamVector&)>;

// Unbiased mini-batch estimator of the full-data potential:
//   U~(theta) = (n/m) * sum_{i in batch} NLL(i, theta) + (lambda/2) |theta|^2
// with E_batch[U~] = U for uniformly drawn batches.
double minibatch_potential(const PotentialSpec& spec, const ExampleNll& nll,
                           const MiniBatch& batch, const ParamVector& theta);
Vec minibatch_potential_grad(const PotentialSpec& spec,
                             const ExampleNllGrad& nll_grad,
                             const MiniBatch& batch, const ParamVector& theta);

// Potential consumed by the samplers: full-data value/gradient plus the
// mini-batch estimator. Evaluation is pure, safe to call from several chains.
class Potential {
 public:
  virtual ~Potential() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t dataset_size() const = 0;
  // lambda of the Gaussian prior; lets optimizers decouple the decay term.
  virtual double prior_precision() const = 0;

  virtual double value(const ParamVector& theta) const = 0;
  virtual Vec grad(const ParamVector& theta) const = 0;

  virtual double minibatch_value(const ParamVector& theta,
                                 const MiniBatch& batch) const = 0;
  virtual Vec minibatch_grad(const ParamVector& theta,
                             const MiniBatch& batch) const = 0;
};

// Analytic mixture target; mini-batch forms coincide with the full ones.
class MixturePotential final : public Potential {
 public:
  explicit MixturePotential(GaussianMixture gm);

  std::size_t dim() const override { return gm_.dim(); }
  std::size_t dataset_size() const override { return 1; }
  double prior_precision() const override { return 0.0; }

  double value(const ParamVector& theta) const override;
  Vec grad(const ParamVector& theta) const override;
  double minibatch_value(const ParamVector& theta,
                         const MiniBatch& batch) const override;
  Vec minibatch_grad(const ParamVector& theta,
                     const MiniBatch& batch) const override;

  const GaussianMixture& mixture() const { return gm_; }

 private:
  GaussianMixture gm_;
};

}  // namespace repmc
