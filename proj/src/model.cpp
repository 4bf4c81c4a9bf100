#include "repmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace repmc {

namespace {

constexpr double kNormFloor = 1e-12;

Vec row_vec(const Matrix& m, std::size_t r) {
  return Vec(m.row(r), m.row(r) + m.cols);
}

// Unpack theta = [W row-major (h x p), b (h)] for the mlp adapter.
struct MlpView {
  const double* W;
  const double* b;
};

MlpView mlp_view(const AdapterModel& model, const ParamVector& theta) {
  return MlpView{theta.data(), theta.data() + model.hidden_dim * model.feature_dim};
}

}  // namespace

Vec FrozenBackbone::features(const Vec& x) const {
  Vec z = matvec(projection, x);
  for (double& v : z) v = std::tanh(v);
  return z;
}

std::size_t AdapterModel::param_dim() const {
  return kind == AdapterKind::Shift ? feature_dim
                                    : hidden_dim * feature_dim + hidden_dim;
}

std::size_t AdapterModel::repr_dim() const {
  return kind == AdapterKind::Shift ? feature_dim : hidden_dim;
}

void AdapterModel::validate() const {
  require(feature_dim > 0, "AdapterModel: feature_dim must be positive");
  if (kind == AdapterKind::Shift) {
    require(mixing.rows == feature_dim && mixing.cols == feature_dim,
            "AdapterModel: shift mixing matrix must be feature_dim x feature_dim");
  } else {
    require(hidden_dim > 0, "AdapterModel: mlp hidden_dim must be positive");
  }
}

void ClassEmbeddings::validate() const {
  require(vectors.size() >= 2, "ClassEmbeddings: need at least two classes");
  require(temperature > 0.0, "ClassEmbeddings: temperature must be positive");
  for (const Vec& v : vectors) {
    require(v.size() == dim(), "ClassEmbeddings: dimension mismatch");
    require(std::abs(norm(v) - 1.0) <= 1e-10,
            "ClassEmbeddings: vectors must be unit norm");
  }
}

RepresentationBatch represent(const AdapterModel& model,
                              const FrozenBackbone& backbone, const Matrix& X,
                              const ParamVector& theta) {
  model.validate();
  require(X.rows > 0, "represent: empty input batch");
  require(X.cols == backbone.input_dim(), "represent: input dimension mismatch");
  require(theta.size() == model.param_dim(), "represent: theta size mismatch");

  RepresentationBatch out;
  out.points.reserve(X.rows);

  if (model.kind == AdapterKind::Shift) {
    Vec offset = matvec(model.mixing, theta);
    for (std::size_t i = 0; i < X.rows; ++i) {
      Vec u = backbone.features(row_vec(X, i));
      axpy(1.0, offset, u);
      out.points.push_back(std::move(u));
    }
  } else {
    MlpView view = mlp_view(model, theta);
    for (std::size_t i = 0; i < X.rows; ++i) {
      Vec phi = backbone.features(row_vec(X, i));
      Vec u(model.hidden_dim);
      for (std::size_t r = 0; r < model.hidden_dim; ++r) {
        const double* wrow = view.W + r * model.feature_dim;
        double s = view.b[r];
        for (std::size_t c = 0; c < model.feature_dim; ++c) s += wrow[c] * phi[c];
        u[r] = std::tanh(s);
      }
      out.points.push_back(std::move(u));
    }
  }
  return out;
}

Vec represent_vjp(const AdapterModel& model, const FrozenBackbone& backbone,
                  const Matrix& X, const ParamVector& theta,
                  const std::vector<Vec>& cotangents) {
  model.validate();
  require(cotangents.size() == X.rows, "represent_vjp: cotangent count mismatch");
  require(theta.size() == model.param_dim(), "represent_vjp: theta size mismatch");

  Vec grad(theta.size(), 0.0);

  if (model.kind == AdapterKind::Shift) {
    // u_i = phi_i + B theta, so the pullback of each cotangent is B^T g.
    Vec total(model.feature_dim, 0.0);
    for (const Vec& g : cotangents) {
      require(g.size() == model.feature_dim, "represent_vjp: cotangent dim mismatch");
      axpy(1.0, g, total);
    }
    grad = matvec_transpose(model.mixing, total);
  } else {
    MlpView view = mlp_view(model, theta);
    double* gW = grad.data();
    double* gb = grad.data() + model.hidden_dim * model.feature_dim;
    for (std::size_t i = 0; i < X.rows; ++i) {
      require(cotangents[i].size() == model.hidden_dim,
              "represent_vjp: cotangent dim mismatch");
      Vec phi = backbone.features(row_vec(X, i));
      for (std::size_t r = 0; r < model.hidden_dim; ++r) {
        const double* wrow = view.W + r * model.feature_dim;
        double s = view.b[r];
        for (std::size_t c = 0; c < model.feature_dim; ++c) s += wrow[c] * phi[c];
        double t = std::tanh(s);
        double delta = cotangents[i][r] * (1.0 - t * t);
        gb[r] += delta;
        double* gwrow = gW + r * model.feature_dim;
        for (std::size_t c = 0; c < model.feature_dim; ++c) {
          gwrow[c] += delta * phi[c];
        }
      }
    }
  }
  return grad;
}

namespace {

// Cosine similarities against every class embedding, with the norm floor.
Vec cosine_scores(const Vec& u, const ClassEmbeddings& emb) {
  double un = norm(u);
  if (un == 0.0) {
    throw InvalidArgumentError("class_probabilities: zero-norm representation");
  }
  un = std::max(un, kNormFloor);
  Vec scores(emb.num_classes());
  for (std::size_t c = 0; c < emb.num_classes(); ++c) {
    double vn = std::max(norm(emb.vectors[c]), kNormFloor);
    scores[c] = dot(u, emb.vectors[c]) / (un * vn);
  }
  return scores;
}

Vec softmax(const Vec& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

}  // namespace

Vec class_probabilities(const Vec& u, const ClassEmbeddings& emb) {
  emb.validate();
  require(u.size() == emb.dim(), "class_probabilities: dimension mismatch");
  Vec scores = cosine_scores(u, emb);
  for (double& s : scores) s /= emb.temperature;
  return softmax(scores);
}

double class_nll(const Vec& u, const ClassEmbeddings& emb, std::size_t label) {
  require(label < emb.num_classes(), "class_nll: label out of range");
  Vec p = class_probabilities(u, emb);
  return -std::log(std::max(p[label], std::numeric_limits<double>::min()));
}

Vec class_nll_grad_u(const Vec& u, const ClassEmbeddings& emb,
                     std::size_t label) {
  emb.validate();
  require(label < emb.num_classes(), "class_nll_grad_u: label out of range");
  require(u.size() == emb.dim(), "class_nll_grad_u: dimension mismatch");

  Vec scores = cosine_scores(u, emb);
  Vec logits = scores;
  for (double& s : logits) s /= emb.temperature;
  Vec p = softmax(logits);

  double un = std::max(norm(u), kNormFloor);
  Vec grad(u.size(), 0.0);
  for (std::size_t c = 0; c < emb.num_classes(); ++c) {
    double coef = (p[c] - (c == label ? 1.0 : 0.0)) / emb.temperature;
    if (coef == 0.0) continue;
    // d cossim(u, v_c)/du = v_c/|u| - cossim * u/|u|^2  (unit-norm v_c)
    for (std::size_t i = 0; i < u.size(); ++i) {
      grad[i] += coef * (emb.vectors[c][i] / un - scores[c] * u[i] / (un * un));
    }
  }
  return grad;
}

Vec ensemble_predict(const std::vector<ParamVector>& samples,
                     const Vec& weights, const Vec& x,
                     const AdapterModel& model, const FrozenBackbone& backbone,
                     const ClassEmbeddings& emb) {
  require(!samples.empty(), "ensemble_predict: empty sample list");
  require(weights.size() == samples.size(), "ensemble_predict: weight count mismatch");
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  require(std::abs(wsum - 1.0) <= 1e-9, "ensemble_predict: weights must sum to 1");

  Matrix X(1, x.size());
  std::copy(x.begin(), x.end(), X.row(0));

  Vec mix(emb.num_classes(), 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    RepresentationBatch r = represent(model, backbone, X, samples[k]);
    Vec p = class_probabilities(r.points[0], emb);
    axpy(weights[k], p, mix);
  }
  return mix;
}

SyntheticTask make_synthetic_task(const TaskParams& params) {
  require(params.num_classes >= 2, "make_synthetic_task: need at least 2 classes");
  require(params.train_size >= params.num_classes,
          "make_synthetic_task: need n >= number of classes");
  require(params.input_dim >= 1 && params.feature_dim >= 1,
          "make_synthetic_task: dimensions must be positive");

  SyntheticTask task;
  task.params = params;

  // One stream drives the whole construction; draw order is part of the
  // reproducibility contract.
  RngStream rng(params.seed, 0);

  // Class-conditional cluster centers, well separated relative to unit noise.
  std::vector<Vec> centers(params.num_classes);
  for (auto& c : centers) {
    c = gaussian_noise(rng, params.input_dim);
    for (double& v : c) v *= 2.5;
  }

  auto draw_split = [&](std::size_t count) {
    SyntheticDataset data;
    data.inputs = Matrix(count, params.input_dim);
    data.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t y = i % params.num_classes;  // every class occupied
      data.labels[i] = y;
      Vec noise = gaussian_noise(rng, params.input_dim);
      for (std::size_t d = 0; d < params.input_dim; ++d) {
        data.inputs.at(i, d) = centers[y][d] + noise[d];
      }
    }
    return data;
  };
  task.train = draw_split(params.train_size);
  task.eval = draw_split(params.eval_size);

  task.backbone.projection = Matrix(params.feature_dim, params.input_dim);
  double proj_scale = 1.0 / std::sqrt(static_cast<double>(params.input_dim));
  for (double& v : task.backbone.projection.values) {
    v = proj_scale * rng.gaussian();
  }

  task.model.kind = params.adapter;
  task.model.feature_dim = params.feature_dim;
  task.model.hidden_dim = params.hidden_dim;
  if (params.adapter == AdapterKind::Shift) {
    task.model.mixing = Matrix(params.feature_dim, params.feature_dim);
    double mix_scale = 1.0 / std::sqrt(static_cast<double>(params.feature_dim));
    for (double& v : task.model.mixing.values) v = mix_scale * rng.gaussian();
  }

  task.embeddings.temperature = params.temperature;
  std::size_t repr = task.model.repr_dim();
  task.embeddings.vectors.resize(params.num_classes);
  for (auto& v : task.embeddings.vectors) {
    v = gaussian_noise(rng, repr);
    double n = norm(v);
    for (double& e : v) e /= n;
  }
  return task;
}

ClassifierPotential::ClassifierPotential(const SyntheticTask& task,
                                         double prior_precision)
    : task_(&task) {
  spec_.kind = PotentialKind::Classifier;
  spec_.prior_precision = prior_precision;
  spec_.dataset_size = task.train.size();
  spec_.validate();
}

double ClassifierPotential::value(const ParamVector& theta) const {
  MiniBatch full;
  full.indices.resize(task_->train.size());
  for (std::size_t i = 0; i < full.indices.size(); ++i) full.indices[i] = i;
  return minibatch_value(theta, full);
}

Vec ClassifierPotential::grad(const ParamVector& theta) const {
  MiniBatch full;
  full.indices.resize(task_->train.size());
  for (std::size_t i = 0; i < full.indices.size(); ++i) full.indices[i] = i;
  return minibatch_grad(theta, full);
}

double ClassifierPotential::minibatch_value(const ParamVector& theta,
                                            const MiniBatch& batch) const {
  ExampleNll nll = [this](std::size_t i, const ParamVector& th) {
    Matrix X(1, task_->train.inputs.cols);
    std::copy(task_->train.inputs.row(i),
              task_->train.inputs.row(i) + task_->train.inputs.cols, X.row(0));
    RepresentationBatch r = represent(task_->model, task_->backbone, X, th);
    return class_nll(r.points[0], task_->embeddings, task_->train.labels[i]);
  };
  return minibatch_potential(spec_, nll, batch, theta);
}

Vec ClassifierPotential::minibatch_grad(const ParamVector& theta,
                                        const MiniBatch& batch) const {
  require(!batch.indices.empty(), "ClassifierPotential: empty batch");
  // Batched pullback: representations for the whole batch, per-example head
  // gradients as cotangents, one VJP sweep.
  Matrix X(batch.size(), task_->train.inputs.cols);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::size_t i = batch.indices[b];
    require(i < task_->train.size(), "ClassifierPotential: index out of range");
    std::copy(task_->train.inputs.row(i),
              task_->train.inputs.row(i) + task_->train.inputs.cols, X.row(b));
  }
  RepresentationBatch reps = represent(task_->model, task_->backbone, X, theta);
  std::vector<Vec> cots(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    cots[b] = class_nll_grad_u(reps.points[b], task_->embeddings,
                               task_->train.labels[batch.indices[b]]);
  }
  Vec grad = represent_vjp(task_->model, task_->backbone, X, theta, cots);
  double scale =
      static_cast<double>(spec_.dataset_size) / static_cast<double>(batch.size());
  for (double& g : grad) g *= scale;
  axpy(spec_.prior_precision, theta, grad);
  return grad;
}

EvalMetrics evaluate_member(const ParamVector& theta, const SyntheticTask& task,
                            const SyntheticDataset& data) {
  require(data.size() > 0, "evaluate_member: empty dataset");
  RepresentationBatch reps =
      represent(task.model, task.backbone, data.inputs, theta);
  EvalMetrics m;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vec p = class_probabilities(reps.points[i], task.embeddings);
    std::size_t argmax =
        std::max_element(p.begin(), p.end()) - p.begin();
    if (argmax == data.labels[i]) m.accuracy += 1.0;
    m.mean_nll += -std::log(std::max(p[data.labels[i]],
                                     std::numeric_limits<double>::min()));
  }
  m.accuracy /= static_cast<double>(data.size());
  m.mean_nll /= static_cast<double>(data.size());
  return m;
}

EvalMetrics evaluate_ensemble(const std::vector<ParamVector>& samples,
                              const Vec& weights, const SyntheticTask& task,
                              const SyntheticDataset& data) {
  require(!samples.empty(), "evaluate_ensemble: empty sample list");
  require(data.size() > 0, "evaluate_ensemble: empty dataset");

  std::vector<RepresentationBatch> reps(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    reps[k] = represent(task.model, task.backbone, data.inputs, samples[k]);
  }
  EvalMetrics m;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Vec mix(task.embeddings.num_classes(), 0.0);
    for (std::size_t k = 0; k < samples.size(); ++k) {
      Vec p = class_probabilities(reps[k].points[i], task.embeddings);
      axpy(weights[k], p, mix);
    }
    std::size_t argmax = std::max_element(mix.begin(), mix.end()) - mix.begin();
    if (argmax == data.labels[i]) m.accuracy += 1.0;
    m.mean_nll += -std::log(std::max(mix[data.labels[i]],
                                     std::numeric_limits<double>::min()));
  }
  m.accuracy /= static_cast<double>(data.size());
  m.mean_nll /= static_cast<double>(data.size());
  return m;
}

}  // namespace repmc
