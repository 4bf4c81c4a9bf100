#pragma once

#include <vector>

#include "repmc/core.hpp"
#include "repmc/potentials.hpp"

namespace repmc {

// Frozen random-feature encoder phi(x) = tanh(P x). Stands in for the frozen
// pretrained encoder; immutable after construction and deterministic from the
// seed of the stream that built it.
struct FrozenBackbone {
  Matrix projection;  // feature_dim x input_dim

  std::size_t feature_dim() const { return projection.rows; }
  std::size_t input_dim() const { return projection.cols; }

  Vec features(const Vec& x) const;
};

enum class AdapterKind { Shift, Mlp };

// Small learnable head ("prompt" analog) on top of the frozen backbone.
//   shift: u = phi(x) + B theta          theta has length feature_dim
//   mlp:   u = tanh(W phi(x) + b)        theta = [W row-major, b], output
//                                        dimension hidden_dim
// The struct carries only the frozen pieces; theta is passed per call so the
// samplers can move it freely.
struct AdapterModel {
  AdapterKind kind = AdapterKind::Shift;
  std::size_t feature_dim = 0;
  std::size_t hidden_dim = 0;  // mlp only
  Matrix mixing;               // B, feature_dim x feature_dim (shift only)

  std::size_t param_dim() const;
  std::size_t repr_dim() const;
  void validate() const;
};

struct ClassEmbeddings {
  std::vector<Vec> vectors;  // C unit-norm vectors of repr dimension
  double temperature = 0.07;

  std::size_t num_classes() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }
  void validate() const;
};

struct SyntheticDataset {
  Matrix inputs;                    // n x input_dim
  std::vector<std::size_t> labels;  // values in [0, C)

  std::size_t size() const { return labels.size(); }
};

// Representations of a batch of inputs (rows of X) under parameters theta.
RepresentationBatch represent(const AdapterModel& model,
                              const FrozenBackbone& backbone, const Matrix& X,
                              const ParamVector& theta);

// Reverse-mode pullback of represent: sum_i (du_i/dtheta)^T cotangent_i.
Vec represent_vjp(const AdapterModel& model, const FrozenBackbone& backbone,
                  const Matrix& X, const ParamVector& theta,
                  const std::vector<Vec>& cotangents);

// Softmax over cosine similarities scaled by 1/temperature.
Vec class_probabilities(const Vec& u, const ClassEmbeddings& emb);

// Cross-entropy pieces of the predictive head, plus the gradient with respect
// to the representation (chained through represent_vjp by callers).
double class_nll(const Vec& u, const ClassEmbeddings& emb, std::size_t label);
Vec class_nll_grad_u(const Vec& u, const ClassEmbeddings& emb,
                     std::size_t label);

// p(y|x) = sum_k w_k p(y|x, theta_k); uniform weights unless given.
Vec ensemble_predict(const std::vector<ParamVector>& samples,
                     const Vec& weights, const Vec& x,
                     const AdapterModel& model, const FrozenBackbone& backbone,
                     const ClassEmbeddings& emb);

struct TaskParams {
  std::uint64_t seed = 7;
  std::size_t train_size = 64;
  std::size_t num_classes = 4;
  std::size_t input_dim = 8;
  std::size_t feature_dim = 16;
  std::size_t hidden_dim = 12;
  AdapterKind adapter = AdapterKind::Mlp;
  double temperature = 0.07;
  std::size_t eval_size = 128;
};

// A complete desk-scale classification task: class-conditional Gaussian
// clusters, a frozen backbone, random unit class embeddings, and a held-out
// evaluation split. Bit-reproducible from the seed.
struct SyntheticTask {
  TaskParams params;
  SyntheticDataset train;
  SyntheticDataset eval;
  FrozenBackbone backbone;
  AdapterModel model;
  ClassEmbeddings embeddings;
};

SyntheticTask make_synthetic_task(const TaskParams& params);

// Classifier potential: scaled mini-batch cross-entropy plus Gaussian prior.
class ClassifierPotential final : public Potential {
 public:
  ClassifierPotential(const SyntheticTask& task, double prior_precision);

  std::size_t dim() const override { return task_->model.param_dim(); }
  std::size_t dataset_size() const override { return task_->train.size(); }
  double prior_precision() const override { return spec_.prior_precision; }

  double value(const ParamVector& theta) const override;
  Vec grad(const ParamVector& theta) const override;
  double minibatch_value(const ParamVector& theta,
                         const MiniBatch& batch) const override;
  Vec minibatch_grad(const ParamVector& theta,
                     const MiniBatch& batch) const override;

  const PotentialSpec& spec() const { return spec_; }

 private:
  const SyntheticTask* task_;
  PotentialSpec spec_;
};

// Accuracy and mean NLL of a single parameter vector on a dataset.
struct EvalMetrics {
  double accuracy = 0.0;
  double mean_nll = 0.0;
};

EvalMetrics evaluate_member(const ParamVector& theta, const SyntheticTask& task,
                            const SyntheticDataset& data);
EvalMetrics evaluate_ensemble(const std::vector<ParamVector>& samples,
                              const Vec& weights, const SyntheticTask& task,
                              const SyntheticDataset& data);

}  // namespace repmc
