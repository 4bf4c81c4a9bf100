#include "repmc/repulsion.hpp"

#include <cmath>

namespace repmc {

void RepulsionConfig::validate() const {
  require(strength >= 0.0, "RepulsionConfig: strength must be >= 0");
  require(epsilon > 0.0, "RepulsionConfig: epsilon must be > 0");
  if (mode == RepulsionMode::Representation) {
    require(probe_batch_size >= 2,
            "RepulsionConfig: representation mode needs probe batch size >= 2");
  }
}

namespace {

void check_context(const RepulsionConfig& cfg, const RepulsionContext* ctx) {
  if (cfg.mode == RepulsionMode::Representation) {
    require(ctx != nullptr && ctx->model != nullptr && ctx->backbone != nullptr &&
                ctx->probe_inputs.rows >= 1,
            "repulsion: representation mode needs a model context with a probe batch");
  }
}

double squared_distance(const ParamVector& theta, const ParamVector& theta_prime,
                        const RepulsionConfig& cfg, const RepulsionContext* ctx,
                        const RepresentationBatch* cached_prime,
                        RepresentationBatch* out_theta_batch) {
  if (cfg.mode == RepulsionMode::ParameterEuclidean) {
    require(theta.size() == theta_prime.size(),
            "repulsion: parameter length mismatch");
    return squared_norm(sub(theta, theta_prime));
  }
  RepresentationBatch ua =
      represent(*ctx->model, *ctx->backbone, ctx->probe_inputs, theta);
  RepresentationBatch ub_local;
  const RepresentationBatch* ub = cached_prime;
  if (ub == nullptr) {
    ub_local = represent(*ctx->model, *ctx->backbone, ctx->probe_inputs,
                         theta_prime);
    ub = &ub_local;
  }
  double d2 = cfg.metric == DistanceMetric::Mmd
                  ? mmd_squared(ua, *ub, RbfKernel{cfg.mmd_sigma})
                  : wasserstein2_squared(ua, *ub);
  if (out_theta_batch != nullptr) *out_theta_batch = std::move(ua);
  return d2;
}

}  // namespace

double repulsive_potential(const ParamVector& theta,
                           const ParamVector& theta_prime,
                           const RepulsionConfig& cfg,
                           const RepulsionContext* ctx) {
  cfg.validate();
  check_context(cfg, ctx);
  double d2 = squared_distance(theta, theta_prime, cfg, ctx, nullptr, nullptr);
  return 1.0 / (d2 + cfg.epsilon);
}

Vec repulsive_force(const ParamVector& theta, const ParamVector& theta_prime,
                    const RepulsionConfig& cfg, const RepulsionContext* ctx,
                    const RepresentationBatch* cached_prime) {
  cfg.validate();
  check_context(cfg, ctx);

  if (cfg.mode == RepulsionMode::ParameterEuclidean) {
    Vec diff = sub(theta, theta_prime);
    double d2 = squared_norm(diff);
    double denom = d2 + cfg.epsilon;
    return scaled(diff, 2.0 / (denom * denom));
  }

  RepresentationBatch ua;
  double d2 = squared_distance(theta, theta_prime, cfg, ctx, cached_prime, &ua);
  RepresentationBatch ub_local;
  const RepresentationBatch* ub = cached_prime;
  if (ub == nullptr) {
    ub_local = represent(*ctx->model, *ctx->backbone, ctx->probe_inputs,
                         theta_prime);
    ub = &ub_local;
  }

  std::vector<Vec> point_grads =
      cfg.metric == DistanceMetric::Mmd
          ? mmd_squared_grad_points(ua, *ub, RbfKernel{cfg.mmd_sigma})
          : wasserstein2_grad_points(ua, *ub);

  Vec grad_d2 = represent_vjp(*ctx->model, *ctx->backbone, ctx->probe_inputs,
                              theta, point_grads);
  double denom = d2 + cfg.epsilon;
  return scaled(grad_d2, 1.0 / (denom * denom));
}

Vec total_repulsion(const ParamVector& theta, const SnapshotSet& snapshots,
                    const RepulsionConfig& cfg, const RepulsionContext* ctx) {
  cfg.validate();
  Vec total(theta.size(), 0.0);
  if (snapshots.empty() || cfg.strength == 0.0) return total;
  check_context(cfg, ctx);

  bool use_cache = cfg.mode == RepulsionMode::Representation &&
                   snapshots.representations.size() == snapshots.size();
  for (std::size_t l = 0; l < snapshots.size(); ++l) {
    const RepresentationBatch* cached =
        use_cache ? &snapshots.representations[l] : nullptr;
    Vec f = repulsive_force(theta, snapshots.parameters[l], cfg, ctx, cached);
    axpy(1.0, f, total);
  }
  for (double& v : total) v *= cfg.strength;
  return total;
}

}  // namespace repmc
