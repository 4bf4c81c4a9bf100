#include "repmc/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

namespace repmc {

void CyclicalSchedule::validate() const {
  require(step_size_init > 0.0, "CyclicalSchedule: step size must be positive");
  require(iters_per_cycle >= 1, "CyclicalSchedule: need at least one iteration per cycle");
  require(cycles >= 1, "CyclicalSchedule: need at least one cycle");
  require(exploration_fraction >= 0.0 && exploration_fraction <= 1.0,
          "CyclicalSchedule: exploration fraction must lie in [0, 1]");
}

double cosine_stepsize(const CyclicalSchedule& sched, std::size_t t) {
  sched.validate();
  require(t >= 1 && t <= sched.iters_per_cycle,
          "cosine_stepsize: iteration out of range");
  double frac = static_cast<double>(t - 1) /
                static_cast<double>(sched.iters_per_cycle);
  return 0.5 * sched.step_size_init *
         (std::cos(std::numbers::pi * frac) + 1.0);
}

void SghmcConfig::validate(const CyclicalSchedule& sched) const {
  require(friction > 0.0 && friction <= 1.0,
          "SghmcConfig: friction must lie in (0, 1]");
  require(gamma_hat >= 0.0, "SghmcConfig: gamma_hat must be >= 0");
  if (gamma_hat >= friction) {
    throw ConfigError("SghmcConfig: need gamma_hat < friction for a real noise scale");
  }
  repulsion.validate();
  double bf = effective_burnin_fraction(sched);
  require(bf >= 0.0 && bf <= sched.exploration_fraction + 1e-12,
          "SghmcConfig: burn-in fraction must lie in [0, beta]");
}

double SghmcConfig::effective_burnin_fraction(const CyclicalSchedule& sched) const {
  if (burnin == BurnIn::None) return 0.0;
  return burnin_fraction.value_or(sched.exploration_fraction);
}

std::vector<ParamVector> SampleArchive::all_samples() const {
  std::vector<ParamVector> out;
  out.reserve(cycles.size() * chains);
  for (const CycleRecord& rec : cycles) {
    for (const ParamVector& s : rec.end_samples) out.push_back(s);
  }
  return out;
}

namespace {

void check_divergence(const ParamVector& theta, std::size_t chain,
                      std::size_t cycle, std::size_t iter) {
  for (double v : theta) {
    if (!std::isfinite(v) || std::abs(v) > kDivergenceThreshold) {
      throw DivergedError("chain " + std::to_string(chain) +
                              " diverged at cycle " + std::to_string(cycle) +
                              " iteration " + std::to_string(iter),
                          chain, cycle, iter);
    }
  }
}

void check_gradient(const Vec& grad, std::size_t chain, std::size_t cycle,
                    std::size_t iter) {
  if (!all_finite(grad)) {
    throw DivergedError("chain " + std::to_string(chain) +
                            " produced a non-finite gradient at cycle " +
                            std::to_string(cycle) + " iteration " +
                            std::to_string(iter),
                        chain, cycle, iter);
  }
}

MiniBatch draw_batch(RngStream& rng, std::size_t batch_size, std::size_t n) {
  MiniBatch batch;
  if (batch_size == 0 || batch_size >= n) {
    batch.indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) batch.indices[i] = i;
  } else {
    batch.indices = rng.sample_without_replacement(batch_size, n);
  }
  return batch;
}

// AdamW-style update with decoupled weight decay; the decay is the Gaussian
// prior precision, removed from the moment estimates and reapplied directly.
void adaptive_moment_step(ChainState& ch, const Potential& potential,
                          const MiniBatch& batch, double alpha, const Vec& offset,
                          std::size_t chain, std::size_t cycle, std::size_t iter) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  Vec g = potential.minibatch_grad(ch.theta, batch);
  check_gradient(g, chain, cycle, iter);
  double lambda = potential.prior_precision();
  axpy(-lambda, ch.theta, g);  // likelihood part only

  if (ch.adam_m.size() != ch.theta.size()) {
    ch.adam_m.assign(ch.theta.size(), 0.0);
    ch.adam_v.assign(ch.theta.size(), 0.0);
    ch.adam_steps = 0;
  }
  ++ch.adam_steps;
  double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(ch.adam_steps));
  double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(ch.adam_steps));
  for (std::size_t i = 0; i < ch.theta.size(); ++i) {
    ch.adam_m[i] = kBeta1 * ch.adam_m[i] + (1.0 - kBeta1) * g[i];
    ch.adam_v[i] = kBeta2 * ch.adam_v[i] + (1.0 - kBeta2) * g[i] * g[i];
    double mhat = ch.adam_m[i] / c1;
    double vhat = ch.adam_v[i] / c2;
    ch.theta[i] += offset[i] - alpha * mhat / (std::sqrt(vhat) + kEps) -
                   alpha * lambda * ch.theta[i];
  }
  check_divergence(ch.theta, chain, cycle, iter);
}

}  // namespace

ParamVector sgld_step(const ParamVector& theta, const Vec& potential_grad,
                      double alpha, RngStream* rng, std::size_t chain_id) {
  require(alpha > 0.0, "sgld_step: step size must be positive");
  require(theta.size() == potential_grad.size(), "sgld_step: size mismatch");
  if (!all_finite(potential_grad)) {
    throw DivergedError("chain " + std::to_string(chain_id) +
                            " produced a non-finite gradient",
                        chain_id, 0, 0);
  }
  ParamVector out = theta;
  axpy(-alpha, potential_grad, out);
  if (rng != nullptr) {
    double scale = std::sqrt(2.0 * alpha);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += scale * rng->gaussian();
    }
  }
  return out;
}

void rcsghmc_step(SamplerState& state, std::size_t k, const Potential& potential,
                  const MiniBatch& batch, const SghmcConfig& cfg,
                  const CyclicalSchedule& sched, std::size_t t,
                  const RepulsionContext* ctx) {
  cfg.validate(sched);
  require(k < state.chains.size(), "rcsghmc_step: chain index out of range");
  ChainState& ch = state.chains[k];
  require(ch.theta.size() == ch.momentum.size(), "rcsghmc_step: state size mismatch");

  double alpha = cosine_stepsize(sched, t);

  Vec repulsion(ch.theta.size(), 0.0);
  if (!state.snapshots.empty()) {
    repulsion = total_repulsion(ch.theta, state.snapshots, cfg.repulsion, ctx);
  }

  Vec grad = potential.minibatch_grad(ch.theta, batch);
  check_gradient(grad, k, state.cycle, t);

  // Position and momentum both read the pre-update pair.
  ParamVector theta_new = ch.theta;
  axpy(1.0, ch.momentum, theta_new);
  axpy(1.0, repulsion, theta_new);

  MomentumVector r_new = scaled(ch.momentum, 1.0 - cfg.friction);
  axpy(-alpha, grad, r_new);

  bool sampling_stage = static_cast<double>(t) /
                            static_cast<double>(sched.iters_per_cycle) >
                        sched.exploration_fraction;
  if (sampling_stage) {
    double scale = std::sqrt(2.0 * (cfg.friction - cfg.gamma_hat) * alpha);
    for (std::size_t i = 0; i < r_new.size(); ++i) {
      r_new[i] += scale * ch.rng.gaussian();
    }
  }

  check_divergence(theta_new, k, state.cycle, t);
  ch.theta = std::move(theta_new);
  ch.momentum = std::move(r_new);
}

RunResult run(const CyclicalSchedule& sched, const SghmcConfig& cfg,
              const Potential& potential, const RunOptions& options) {
  sched.validate();
  cfg.validate(sched);
  require(options.chains >= 1, "run: need at least one chain");

  bool representation_repulsion =
      options.algorithm == Algorithm::Rcsghmc &&
      cfg.repulsion.mode == RepulsionMode::Representation;
  if (representation_repulsion) {
    require(options.model != nullptr && options.backbone != nullptr &&
                options.probe_pool != nullptr,
            "run: representation-mode repulsion needs model, backbone and probe pool");
    require(options.probe_pool->rows >= cfg.repulsion.probe_batch_size,
            "run: probe pool smaller than the repulsion batch size");
  }

  std::size_t K = options.chains;
  std::size_t T = sched.iters_per_cycle;
  std::size_t D = options.init.empty()
                      ? options.param_dim
                      : options.init.front().size();
  require(D > 0, "run: parameter dimension not determined");

  SamplerState state;
  state.chains.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    ChainState& ch = state.chains[k];
    ch.rng = RngStream(options.seed, k);
    if (!options.init.empty()) {
      ch.theta = options.init.size() == 1 ? options.init.front()
                                          : options.init.at(k);
      require(ch.theta.size() == D, "run: inconsistent init dimensions");
    } else {
      ch.theta = gaussian_noise(ch.rng, D);
      for (double& v : ch.theta) v *= options.init_scale;
    }
    ch.momentum.assign(D, 0.0);
  }
  // Run-level stream (id K) drives probe-batch selection so chain streams
  // stay untouched by it.
  RngStream run_rng(options.seed, K);

  RunResult result;
  result.trajectories.assign(options.record_trajectory ? K : 0, {});
  for (auto& traj : result.trajectories) traj.reserve(sched.cycles * T);
  result.archive.seed = options.seed;
  result.archive.chains = K;
  result.archive.iters_per_cycle = T;

  std::size_t burnin_steps = static_cast<std::size_t>(
      std::floor(cfg.effective_burnin_fraction(sched) * static_cast<double>(T)));

  for (std::size_t c = 1; c <= sched.cycles; ++c) {
    state.cycle = c;

    RepulsionContext ctx;
    const RepulsionContext* ctx_ptr = nullptr;
    if (representation_repulsion) {
      // Fixed probe batch for the whole cycle; snapshot representations are
      // cached against it.
      std::vector<std::size_t> rows = run_rng.sample_without_replacement(
          cfg.repulsion.probe_batch_size, options.probe_pool->rows);
      ctx.model = options.model;
      ctx.backbone = options.backbone;
      ctx.probe_inputs = Matrix(rows.size(), options.probe_pool->cols);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(options.probe_pool->row(rows[i]),
                  options.probe_pool->row(rows[i]) + options.probe_pool->cols,
                  ctx.probe_inputs.row(i));
      }
      state.snapshots.representations.clear();
      for (const ParamVector& snap : state.snapshots.parameters) {
        state.snapshots.representations.push_back(
            represent(*options.model, *options.backbone, ctx.probe_inputs, snap));
      }
      ctx_ptr = &ctx;
    }

    for (std::size_t k = 0; k < K; ++k) {
      ChainState& ch = state.chains[k];
      if (cfg.momentum_reset) ch.momentum.assign(D, 0.0);
      ch.adam_m.clear();
      ch.adam_v.clear();
      ch.adam_steps = 0;
    }

    auto advance_chain = [&](std::size_t k) {
      ChainState& ch = state.chains[k];
      for (std::size_t t = 1; t <= T; ++t) {
        MiniBatch batch =
            draw_batch(ch.rng, options.batch_size, potential.dataset_size());
        if (t <= burnin_steps) {
          double alpha = cosine_stepsize(sched, t);
          Vec offset(D, 0.0);
          if (options.algorithm == Algorithm::Rcsghmc &&
              !state.snapshots.empty()) {
            offset = total_repulsion(ch.theta, state.snapshots, cfg.repulsion,
                                     ctx_ptr);
          }
          adaptive_moment_step(ch, potential, batch, alpha, offset, k, c, t);
        } else if (options.algorithm == Algorithm::Sgld) {
          double alpha = cosine_stepsize(sched, t);
          Vec grad = potential.minibatch_grad(ch.theta, batch);
          check_gradient(grad, k, c, t);
          ch.theta = sgld_step(ch.theta, grad, alpha, &ch.rng, k);
          check_divergence(ch.theta, k, c, t);
        } else {
          rcsghmc_step(state, k, potential, batch, cfg, sched, t, ctx_ptr);
        }
        if (options.record_trajectory) {
          result.trajectories[k].push_back(ch.theta);
        }
        if (options.observer && options.threads <= 1) {
          state.iteration = t;
          options.observer(state, k, c, t);
        }
      }
    };

    if (options.threads > 1 && K > 1) {
      // Chains are independent within a cycle; split them across workers.
      std::size_t workers = std::min(options.threads, K);
      std::vector<std::thread> pool;
      std::exception_ptr error;
      std::mutex error_mutex;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
          try {
            for (std::size_t k = w; k < K; k += workers) advance_chain(k);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        });
      }
      for (auto& th : pool) th.join();
      if (error) std::rethrow_exception(error);
    } else {
      for (std::size_t k = 0; k < K; ++k) advance_chain(k);
    }

    // Cycle barrier: archive end samples. Only the repulsive algorithm
    // publishes them as the snapshot set the next cycle repels from; plain
    // cyclical SGHMC and SGLD keep the snapshot set empty.
    CycleRecord record;
    record.end_samples.reserve(K);
    record.end_potentials.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
      record.end_samples.push_back(state.chains[k].theta);
      record.end_potentials.push_back(potential.value(state.chains[k].theta));
    }
    if (options.algorithm == Algorithm::Rcsghmc) {
      state.snapshots.parameters = record.end_samples;
      state.snapshots.representations.clear();
    }
    result.archive.cycles.push_back(std::move(record));
  }

  result.gaussian_draws_per_chain.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    result.gaussian_draws_per_chain[k] =
        state.chains[k].rng.gaussian_draw_count();
  }
  return result;
}

MapResult map_baseline(const Potential& potential, const ParamVector& theta0,
                       double step_size, std::size_t max_iters, double grad_tol) {
  require(step_size > 0.0, "map_baseline: step size must be positive");
  require(!theta0.empty(), "map_baseline: empty initial point");

  MapResult res;
  res.theta = theta0;
  double value = potential.value(res.theta);
  double alpha = step_size;
  double alpha_cap = step_size * 16.0;

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    Vec grad = potential.grad(res.theta);
    if (!all_finite(grad)) {
      throw DivergedError("map_baseline: non-finite gradient", 0, 0, iter);
    }
    double gnorm = norm(grad);
    res.grad_norm = gnorm;
    res.iterations = iter;
    if (gnorm < grad_tol) break;

    // Deterministic backtracking with mild growth on acceptance.
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      ParamVector candidate = res.theta;
      axpy(-alpha, grad, candidate);
      double cand_value = potential.value(candidate);
      if (std::isfinite(cand_value) && cand_value <= value) {
        res.theta = std::move(candidate);
        value = cand_value;
        alpha = std::min(alpha * 1.25, alpha_cap);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // step underflow: local optimum at this scale
  }
  res.potential_value = value;
  res.grad_norm = norm(potential.grad(res.theta));
  return res;
}

}  // namespace repmc
