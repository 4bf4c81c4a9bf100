#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "repmc/core.hpp"
#include "repmc/potentials.hpp"
#include "repmc/repulsion.hpp"

namespace repmc {

// Cosine-restart step-size schedule: within each cycle of T iterations,
// alpha_t = (alpha0/2) * (cos(pi (t-1)/T) + 1), restarting at alpha0.
struct CyclicalSchedule {
  double step_size_init = 2e-3;        // alpha0 > 0
  std::size_t iters_per_cycle = 400;   // T >= 1
  std::size_t cycles = 3;              // C >= 1
  double exploration_fraction = 0.7;   // beta in [0, 1]

  void validate() const;
};

double cosine_stepsize(const CyclicalSchedule& sched, std::size_t t);

enum class BurnIn { None, AdaptiveMoment };

struct SghmcConfig {
  double friction = 0.1;    // eta in (0, 1]
  double gamma_hat = 0.0;   // gradient-noise estimate, 0 <= gamma_hat < eta
  RepulsionConfig repulsion;
  BurnIn burnin = BurnIn::None;
  // Fraction of each cycle spent in adaptive-moment burn-in; defaults to the
  // exploration fraction, must not exceed it.
  std::optional<double> burnin_fraction;
  bool momentum_reset = true;  // r = 0 at each cycle start

  void validate(const CyclicalSchedule& sched) const;
  double effective_burnin_fraction(const CyclicalSchedule& sched) const;
};

struct ChainState {
  ParamVector theta;
  MomentumVector momentum;
  RngStream rng;
  // Adaptive-moment buffers, reset at each cycle start.
  Vec adam_m;
  Vec adam_v;
  std::size_t adam_steps = 0;
};

struct SamplerState {
  std::vector<ChainState> chains;
  std::size_t cycle = 1;      // c in [1, C]
  std::size_t iteration = 1;  // t in [1, T]
  SnapshotSet snapshots;      // frozen previous-cycle end samples
};

// Per-cycle archive of end-of-cycle samples, K entries per completed cycle.
struct CycleRecord {
  std::vector<ParamVector> end_samples;
  std::vector<double> end_potentials;  // full-data U at each end sample
};

struct SampleArchive {
  std::uint64_t seed = 0;
  std::size_t chains = 0;
  std::size_t iters_per_cycle = 0;
  std::vector<CycleRecord> cycles;

  std::vector<ParamVector> all_samples() const;  // cycle-major flattening
};

enum class Algorithm { Sgld, Sghmc, Rcsghmc };

struct RunOptions {
  Algorithm algorithm = Algorithm::Rcsghmc;
  std::size_t chains = 1;  // K
  std::uint64_t seed = 1;
  std::size_t batch_size = 0;  // 0 or >= n: full batch
  // Per-chain initial parameters (size K, or size 1 shared by all chains).
  std::vector<ParamVector> init;
  double init_scale = 0.0;  // when init is empty: theta0 = scale * N(0, I)
  std::size_t param_dim = 0;  // required when init is empty
  // Representation-mode repulsion context; the probe batch is resampled from
  // probe_pool once per cycle and snapshot representations are cached.
  const AdapterModel* model = nullptr;
  const FrozenBackbone* backbone = nullptr;
  const Matrix* probe_pool = nullptr;
  bool record_trajectory = true;
  std::size_t threads = 1;  // chain-parallelism degree; results independent
  // Test instrumentation, called after each chain step when threads == 1.
  std::function<void(const SamplerState&, std::size_t chain, std::size_t cycle,
                     std::size_t iter)>
      observer;
};

struct RunResult {
  SampleArchive archive;
  // trajectories[k][(c-1)*T + (t-1)] = theta of chain k after iteration t of
  // cycle c; empty when record_trajectory is off.
  std::vector<std::vector<ParamVector>> trajectories;
  std::vector<std::uint64_t> gaussian_draws_per_chain;
};

// One Euler-Maruyama step: theta - alpha * grad + sqrt(2 alpha) * eps.
// A null rng disables the noise term (deterministic test hook).
ParamVector sgld_step(const ParamVector& theta, const Vec& potential_grad,
                      double alpha, RngStream* rng, std::size_t chain_id = 0);

// One update of chain k per the repulsive cyclical SGHMC recursion:
//   theta' = theta + r + xi * sum_l F(theta, snapshot_l)
//   r'     = (1 - eta) r - alpha_t grad U~(theta)
//            + 1[t/T > beta] sqrt(2 (eta - gamma_hat) alpha_t) eps
// All right-hand sides read the pre-update (theta, r). The repulsion sum is
// dropped during the first cycle (empty snapshot set).
void rcsghmc_step(SamplerState& state, std::size_t k, const Potential& potential,
                  const MiniBatch& batch, const SghmcConfig& cfg,
                  const CyclicalSchedule& sched, std::size_t t,
                  const RepulsionContext* ctx = nullptr);

// Full driver: C cycles x T iterations x K chains with cycle-end snapshot
// swaps, optional adaptive-moment burn-in, and divergence detection.
RunResult run(const CyclicalSchedule& sched, const SghmcConfig& cfg,
              const Potential& potential, const RunOptions& options);

// Deterministic gradient descent on the full-data potential (MAP baseline).
struct MapResult {
  ParamVector theta;
  double potential_value = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
};

MapResult map_baseline(const Potential& potential, const ParamVector& theta0,
                       double step_size, std::size_t max_iters = 20000,
                       double grad_tol = 1e-6);

inline constexpr double kDivergenceThreshold = 1e8;

}  // namespace repmc
