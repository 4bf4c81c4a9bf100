#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "repmc/repulsion.hpp"

using namespace repmc;

namespace {

SyntheticTask shift_task(std::uint64_t seed = 5) {
  TaskParams p;
  p.seed = seed;
  p.train_size = 12;
  p.num_classes = 2;
  p.input_dim = 4;
  p.feature_dim = 5;
  p.adapter = AdapterKind::Shift;
  p.eval_size = 10;
  return make_synthetic_task(p);
}

RepulsionContext make_context(const SyntheticTask& task, std::size_t probe_rows) {
  RepulsionContext ctx;
  ctx.model = &task.model;
  ctx.backbone = &task.backbone;
  ctx.probe_inputs = Matrix(probe_rows, task.eval.inputs.cols);
  std::copy(task.eval.inputs.values.begin(),
            task.eval.inputs.values.begin() + probe_rows * task.eval.inputs.cols,
            ctx.probe_inputs.values.begin());
  return ctx;
}

}  // namespace

TEST_SUITE("repulsion") {

TEST_CASE("potential at unit distance with tiny epsilon") {
  RepulsionConfig cfg;
  cfg.epsilon = 1e-6;
  ParamVector a = {1.0, 0.0};
  ParamVector b = {0.0, 0.0};
  CHECK(repulsive_potential(a, b, cfg) ==
        doctest::Approx(1.0 / (1.0 + 1e-6)).epsilon(1e-12));
}

TEST_CASE("coincident parameters give the ceiling 1/epsilon") {
  RepulsionConfig cfg;
  cfg.epsilon = 0.25;
  ParamVector a = {0.4, -0.8};
  CHECK(repulsive_potential(a, a, cfg) == 4.0);
}

TEST_CASE("potential decreases monotonically along a ray") {
  RepulsionConfig cfg;
  cfg.epsilon = 1e-3;
  ParamVector origin = {0.0, 0.0};
  double previous = 1.0 / cfg.epsilon;
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    double v = repulsive_potential({r, 0.0}, origin, cfg);
    CHECK(v < previous);
    previous = v;
  }
}

TEST_CASE("parameter-mode force points away with the closed form") {
  RepulsionConfig cfg;
  cfg.epsilon = 1e-9;
  Vec f = repulsive_force({1.0, 0.0}, {0.0, 0.0}, cfg);
  CHECK(f[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(f[1] == 0.0);
}

TEST_CASE("force never attracts in parameter mode") {
  RngStream rng(1, 0);
  RepulsionConfig cfg;
  cfg.epsilon = 0.05;
  for (int rep = 0; rep < 30; ++rep) {
    ParamVector a = gaussian_noise(rng, 3);
    ParamVector b = gaussian_noise(rng, 3);
    Vec f = repulsive_force(a, b, cfg);
    CHECK(dot(f, sub(a, b)) >= 0.0);
  }
}

TEST_CASE("force matches finite differences of -V in parameter mode") {
  RngStream rng(2, 0);
  RepulsionConfig cfg;
  cfg.epsilon = 0.1;
  for (int rep = 0; rep < 20; ++rep) {
    ParamVector a = gaussian_noise(rng, 3);
    ParamVector b = gaussian_noise(rng, 3);
    Vec f = repulsive_force(a, b, cfg);
    Vec fd = finite_difference_gradient(
        [&](const Vec& x) { return -repulsive_potential(x, b, cfg); }, a);
    CHECK(testing::grads_close(f, fd, 1e-6));
  }
}

TEST_CASE("force matches finite differences of -V in representation mode") {
  SyntheticTask task = shift_task();
  RepulsionContext ctx = make_context(task, 6);
  RngStream rng(3, 0);
  for (DistanceMetric metric : {DistanceMetric::Mmd, DistanceMetric::Wasserstein}) {
    RepulsionConfig cfg;
    cfg.mode = RepulsionMode::Representation;
    cfg.metric = metric;
    cfg.epsilon = 0.1;
    cfg.probe_batch_size = 6;
    cfg.mmd_sigma = 1.0;  // fixed bandwidth so -V is differentiable
    for (int rep = 0; rep < 10; ++rep) {
      ParamVector a = gaussian_noise(rng, task.model.param_dim());
      ParamVector b = gaussian_noise(rng, task.model.param_dim());
      Vec f = repulsive_force(a, b, cfg, &ctx);
      Vec fd = finite_difference_gradient(
          [&](const Vec& x) { return -repulsive_potential(x, b, cfg, &ctx); },
          a);
      CHECK(testing::grads_close(f, fd, 1e-5));
    }
  }
}

TEST_CASE("representation force on the shift model has the mixed closed form") {
  // u_i shifts rigidly by B(theta - theta'), so grad d^2 = 2 B^T B delta and
  // F = 2 B^T B delta / (|B delta|^2 + eps)^2.
  SyntheticTask task = shift_task();
  RepulsionContext ctx = make_context(task, 8);
  RepulsionConfig cfg;
  cfg.mode = RepulsionMode::Representation;
  cfg.metric = DistanceMetric::Wasserstein;
  cfg.epsilon = 0.2;
  cfg.probe_batch_size = 8;

  RngStream rng(4, 0);
  ParamVector a = gaussian_noise(rng, task.model.param_dim());
  ParamVector b = gaussian_noise(rng, task.model.param_dim());
  Vec delta = sub(a, b);
  Vec mixed = matvec(task.model.mixing, delta);
  double denom = squared_norm(mixed) + cfg.epsilon;
  Vec expected = scaled(matvec_transpose(task.model.mixing, mixed),
                        2.0 / (denom * denom));
  Vec f = repulsive_force(a, b, cfg, &ctx);
  CHECK(testing::grads_close(expected, f, 1e-8));
}

TEST_CASE("total repulsion edge cases") {
  RepulsionConfig cfg;
  cfg.strength = 0.7;
  ParamVector theta = {1.0, 2.0};

  SnapshotSet empty;
  Vec none = total_repulsion(theta, empty, cfg);
  CHECK(none == Vec{0.0, 0.0});

  SnapshotSet snaps;
  snaps.parameters = {{0.0, 0.0}};
  RepulsionConfig off = cfg;
  off.strength = 0.0;
  CHECK(total_repulsion(theta, snaps, off) == Vec{0.0, 0.0});
}

TEST_CASE("symmetric snapshots cancel") {
  RepulsionConfig cfg;
  cfg.strength = 2.0;
  cfg.epsilon = 0.01;
  ParamVector theta = {0.5, -0.25};
  Vec offset = {1.2, 0.4};
  SnapshotSet snaps;
  snaps.parameters = {add(theta, offset), sub(theta, offset)};
  Vec f = total_repulsion(theta, snaps, cfg);
  CHECK(norm(f) < 1e-14);
}

TEST_CASE("total repulsion is linear in the strength") {
  RngStream rng(5, 0);
  RepulsionConfig cfg;
  cfg.epsilon = 0.05;
  cfg.strength = 0.3;
  ParamVector theta = gaussian_noise(rng, 3);
  SnapshotSet snaps;
  snaps.parameters = {gaussian_noise(rng, 3), gaussian_noise(rng, 3)};
  Vec once = total_repulsion(theta, snaps, cfg);
  RepulsionConfig doubled = cfg;
  doubled.strength = 0.6;
  Vec twice = total_repulsion(theta, snaps, doubled);
  for (std::size_t i = 0; i < once.size(); ++i) {
    CHECK(twice[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-14));
  }
}

TEST_CASE("snapshot representation cache matches uncached forces") {
  SyntheticTask task = shift_task();
  RepulsionContext ctx = make_context(task, 6);
  RepulsionConfig cfg;
  cfg.mode = RepulsionMode::Representation;
  cfg.metric = DistanceMetric::Mmd;
  cfg.strength = 1.0;
  cfg.epsilon = 0.1;
  cfg.probe_batch_size = 6;

  RngStream rng(6, 0);
  ParamVector theta = gaussian_noise(rng, task.model.param_dim());
  SnapshotSet snaps;
  snaps.parameters = {gaussian_noise(rng, task.model.param_dim()),
                      gaussian_noise(rng, task.model.param_dim())};
  Vec uncached = total_repulsion(theta, snaps, cfg, &ctx);
  for (const ParamVector& snap : snaps.parameters) {
    snaps.representations.push_back(
        represent(task.model, task.backbone, ctx.probe_inputs, snap));
  }
  Vec cached = total_repulsion(theta, snaps, cfg, &ctx);
  CHECK(cached == uncached);
}

TEST_CASE("invalid configurations are rejected") {
  RepulsionConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg.epsilon = 1e-6;
  cfg.strength = -1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
  cfg.strength = 0.0;
  cfg.mode = RepulsionMode::Representation;
  cfg.probe_batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgumentError);
}

}  // TEST_SUITE
