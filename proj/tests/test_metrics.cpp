#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "repmc/metrics.hpp"

using namespace repmc;

namespace {

RepresentationBatch make_batch(std::vector<Vec> pts) {
  RepresentationBatch b;
  b.points = std::move(pts);
  return b;
}

SyntheticTask shift_task(std::uint64_t seed = 7) {
  TaskParams p;
  p.seed = seed;
  p.train_size = 16;
  p.num_classes = 2;
  p.input_dim = 4;
  p.feature_dim = 5;
  p.adapter = AdapterKind::Shift;
  p.eval_size = 12;
  return make_synthetic_task(p);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mmd of identical point lists vanishes") {
  RngStream rng(1, 0);
  RepresentationBatch a = make_batch(testing::random_points(rng, 6, 3));
  CHECK(std::abs(mmd_squared(a, a, RbfKernel::median_heuristic())) <= 1e-12);
  CHECK(std::abs(mmd_squared(a, a, RbfKernel::with_bandwidth(0.7))) <= 1e-12);
}

TEST_CASE("hand-evaluated 1-D instance") {
  RepresentationBatch a = make_batch({{0.0}});
  RepresentationBatch b = make_batch({{1.0}});
  double expected = 2.0 - 2.0 * std::exp(-0.5);
  CHECK(mmd_squared(a, b, RbfKernel::with_bandwidth(1.0)) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mmd agrees with the direct triple-sum oracle") {
  RngStream rng(2, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 2 + rng.uniform_index(6);
    std::size_t m = 2 + rng.uniform_index(6);
    auto pa = testing::random_points(rng, n, 3);
    auto pb = testing::random_points(rng, m, 3);
    double sigma = 0.5 + rng.uniform();
    double lib = mmd_squared(make_batch(pa), make_batch(pb),
                             RbfKernel::with_bandwidth(sigma));
    double oracle = testing::naive_mmd_squared(pa, pb, sigma);
    CHECK(std::abs(lib - oracle) <= 1e-12);
  }
}

TEST_CASE("mmd is symmetric") {
  RngStream rng(3, 0);
  for (int rep = 0; rep < 20; ++rep) {
    RepresentationBatch a = make_batch(testing::random_points(rng, 4, 2));
    RepresentationBatch b = make_batch(testing::random_points(rng, 5, 2));
    RbfKernel k = RbfKernel::with_bandwidth(1.3);
    CHECK(mmd_squared(a, b, k) == doctest::Approx(mmd_squared(b, a, k)).epsilon(1e-14));
  }
}

TEST_CASE("v-statistic is nonnegative, zero only for equal multisets") {
  RngStream rng(4, 0);
  for (int rep = 0; rep < 30; ++rep) {
    RepresentationBatch a = make_batch(testing::random_points(rng, 5, 2));
    RepresentationBatch b = make_batch(testing::random_points(rng, 5, 2));
    CHECK(mmd_squared(a, b, RbfKernel::median_heuristic()) >= -1e-12);
  }
  // Same multiset in a different order.
  RepresentationBatch a = make_batch({{0.0, 1.0}, {2.0, -1.0}, {0.5, 0.5}});
  RepresentationBatch shuffled =
      make_batch({{0.5, 0.5}, {0.0, 1.0}, {2.0, -1.0}});
  CHECK(std::abs(mmd_squared(a, shuffled, RbfKernel::with_bandwidth(1.0))) <= 1e-12);
  // Distinct multisets.
  RepresentationBatch c = make_batch({{0.0, 1.0}, {2.0, -1.0}, {0.6, 0.5}});
  CHECK(mmd_squared(a, c, RbfKernel::with_bandwidth(1.0)) > 1e-8);
}

TEST_CASE("u-statistic variant is available and drops diagonal terms") {
  auto pa = std::vector<Vec>{{0.0}, {1.0}};
  auto pb = std::vector<Vec>{{2.0}, {3.0}};
  double sigma = 1.0;
  // Hand-built unbiased estimator.
  auto k = [&](double x, double y) {
    return std::exp(-(x - y) * (x - y) / (2.0 * sigma * sigma));
  };
  double aa = 2.0 * k(0, 1) / (2.0 * 1.0);
  double bb = 2.0 * k(2, 3) / (2.0 * 1.0);
  double ab = (k(0, 2) + k(0, 3) + k(1, 2) + k(1, 3)) * 2.0 / 4.0;
  double expected = aa + bb - ab;
  double lib = mmd_squared(make_batch(pa), make_batch(pb),
                           RbfKernel::with_bandwidth(sigma),
                           MmdEstimator::UStatistic);
  CHECK(lib == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(mmd_squared(make_batch({{0.0}}), make_batch(pb),
                              RbfKernel::with_bandwidth(1.0),
                              MmdEstimator::UStatistic),
                  InvalidArgumentError);
}

TEST_CASE("mmd point gradients match finite differences") {
  RngStream rng(5, 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 3, m = 4, dim = 2;
    auto pa = testing::random_points(rng, n, dim);
    auto pb = testing::random_points(rng, m, dim);
    RbfKernel kernel = RbfKernel::with_bandwidth(0.8 + rng.uniform());
    auto grads = mmd_squared_grad_points(make_batch(pa), make_batch(pb), kernel);

    for (std::size_t i = 0; i < n; ++i) {
      Vec flat = pa[i];
      Vec fd = finite_difference_gradient(
          [&](const Vec& x) {
            auto moved = pa;
            moved[i] = x;
            return mmd_squared(make_batch(moved), make_batch(pb), kernel);
          },
          flat);
      CHECK(testing::grads_close(grads[i], fd, 1e-5));
    }
  }
}

TEST_CASE("mmd gradient is stationary at equality") {
  RngStream rng(6, 0);
  auto pts = testing::random_points(rng, 5, 2);
  auto grads = mmd_squared_grad_points(make_batch(pts), make_batch(pts),
                                       RbfKernel::with_bandwidth(1.0));
  for (const Vec& g : grads) CHECK(norm(g) < 1e-8);
}

TEST_CASE("single-pair gradient has the closed cross-term form") {
  Vec a = {1.0, -0.5};
  Vec b = {0.2, 0.7};
  double sigma = 1.3;
  auto grads = mmd_squared_grad_points(make_batch({a}), make_batch({b}),
                                       RbfKernel::with_bandwidth(sigma));
  double d2 = squared_norm(sub(a, b));
  double coef = 2.0 / (sigma * sigma) * std::exp(-d2 / (2.0 * sigma * sigma));
  Vec expected = scaled(sub(a, b), coef);
  CHECK(testing::grads_close(expected, grads[0], 1e-12, 1e-12));
}

TEST_CASE("assignment on a trivial 2x2 cost") {
  Matrix cost(2, 2);
  cost.values = {0.0, 1.0, 1.0, 0.0};
  AssignmentResult res = solve_assignment(cost);
  CHECK(res.plan.pairing == std::vector<std::size_t>{0, 1});
  CHECK(res.total_cost == 0.0);
}

TEST_CASE("assignment equals permutation brute force") {
  RngStream rng(7, 0);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix cost(4, 4);
    for (double& v : cost.values) v = rng.uniform() * 10.0;
    AssignmentResult res = solve_assignment(cost);
    double oracle = testing::brute_force_assignment_cost(cost);
    CHECK(res.total_cost == doctest::Approx(oracle).epsilon(1e-12));
  }
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 2 + rng.uniform_index(5);  // up to 6
    Matrix cost(n, n);
    for (double& v : cost.values) v = rng.uniform() * 4.0 - 2.0;
    AssignmentResult res = solve_assignment(cost);
    CHECK(res.total_cost ==
          doctest::Approx(testing::brute_force_assignment_cost(cost)).epsilon(1e-12));
  }
}

TEST_CASE("uniform cost shifts do not change the optimal pairing") {
  RngStream rng(8, 0);
  Matrix cost(5, 5);
  for (double& v : cost.values) v = rng.uniform();
  AssignmentResult base = solve_assignment(cost);
  Matrix shifted = cost;
  for (double& v : shifted.values) v += 3.7;
  AssignmentResult res = solve_assignment(shifted);
  CHECK(res.plan.pairing == base.plan.pairing);
}

TEST_CASE("non-square cost is rejected") {
  Matrix cost(2, 3);
  CHECK_THROWS_AS(solve_assignment(cost), InvalidArgumentError);
}

TEST_CASE("wasserstein hand-checked instances") {
  CHECK(wasserstein2_squared(make_batch({{0.0}, {1.0}}),
                             make_batch({{2.0}, {3.0}})) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(wasserstein2_squared(make_batch({{0.0, 0.0}}),
                             make_batch({{3.0, 4.0}})) ==
        doctest::Approx(25.0).epsilon(1e-14));
  RngStream rng(9, 0);
  RepresentationBatch a = make_batch(testing::random_points(rng, 5, 3));
  CHECK(wasserstein2_squared(a, a) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("wasserstein equals permutation brute force") {
  RngStream rng(10, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 2 + rng.uniform_index(5);
    auto pa = testing::random_points(rng, n, 2);
    auto pb = testing::random_points(rng, n, 2);
    double lib = wasserstein2_squared(make_batch(pa), make_batch(pb));
    double oracle = testing::brute_force_w2_squared(pa, pb);
    CHECK(std::abs(lib - oracle) <= 1e-9);
  }
}

TEST_CASE("unequal batch sizes are rejected") {
  RepresentationBatch a = make_batch({{0.0}, {1.0}});
  RepresentationBatch b = make_batch({{2.0}});
  CHECK_THROWS_AS(wasserstein2_squared(a, b), InvalidArgumentError);
}

TEST_CASE("triangle inequality on the square root") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 30; ++rep) {
    std::size_t n = 2 + rng.uniform_index(7);  // up to 8
    RepresentationBatch a = make_batch(testing::random_points(rng, n, 2));
    RepresentationBatch b = make_batch(testing::random_points(rng, n, 2));
    RepresentationBatch c = make_batch(testing::random_points(rng, n, 2));
    double ab = std::sqrt(wasserstein2_squared(a, b));
    double bc = std::sqrt(wasserstein2_squared(b, c));
    double ac = std::sqrt(wasserstein2_squared(a, c));
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("pure translations cost exactly the shift") {
  RngStream rng(12, 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 3 + rng.uniform_index(4);
    auto pts = testing::random_points(rng, n, 3);
    Vec c = gaussian_noise(rng, 3);
    auto shifted = pts;
    for (Vec& p : shifted) axpy(1.0, c, p);
    double lib = wasserstein2_squared(make_batch(pts), make_batch(shifted));
    CHECK(lib == doctest::Approx(squared_norm(c)).epsilon(1e-10));
  }
}

TEST_CASE("wasserstein point gradients match finite differences away from ties") {
  RngStream rng(13, 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t n = 4;
    auto pa = testing::random_points(rng, n, 2);
    auto pb = testing::random_points(rng, n, 2);
    auto grads = wasserstein2_grad_points(make_batch(pa), make_batch(pb));
    for (std::size_t i = 0; i < n; ++i) {
      Vec fd = finite_difference_gradient(
          [&](const Vec& x) {
            auto moved = pa;
            moved[i] = x;
            return wasserstein2_squared(make_batch(moved), make_batch(pb));
          },
          pa[i]);
      CHECK(testing::grads_close(grads[i], fd, 1e-4));
    }
  }
}

TEST_CASE("wasserstein gradient special cases") {
  RngStream rng(14, 0);
  auto pts = testing::random_points(rng, 4, 2);
  auto zero = wasserstein2_grad_points(make_batch(pts), make_batch(pts));
  for (const Vec& g : zero) CHECK(norm(g) < 1e-12);

  auto single = wasserstein2_grad_points(make_batch({{0.0}}), make_batch({{3.0}}));
  CHECK(single[0][0] == doctest::Approx(-6.0).epsilon(1e-14));
}

TEST_CASE("representation distance basics") {
  SyntheticTask task = shift_task();
  Matrix probe = task.eval.inputs;
  RngStream rng(15, 0);
  ParamVector theta = gaussian_noise(rng, task.model.param_dim());
  ParamVector theta2 = gaussian_noise(rng, task.model.param_dim());

  for (DistanceMetric metric : {DistanceMetric::Mmd, DistanceMetric::Wasserstein}) {
    CHECK(std::abs(representation_distance(theta, theta, task.model,
                                           task.backbone, probe, metric)) <= 1e-12);
    double ab = representation_distance(theta, theta2, task.model, task.backbone,
                                        probe, metric);
    double ba = representation_distance(theta2, theta, task.model, task.backbone,
                                        probe, metric);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-10));
  }
}

TEST_CASE("shift model wasserstein distance is the mixed-parameter norm") {
  // Representations shift rigidly by B(theta - theta'), so W2^2 equals
  // |B (theta - theta')|^2 exactly, growing monotonically along a ray.
  SyntheticTask task = shift_task();
  Matrix probe = task.eval.inputs;
  RngStream rng(16, 0);
  ParamVector base = gaussian_noise(rng, task.model.param_dim());
  Vec direction = gaussian_noise(rng, task.model.param_dim());

  double previous = -1.0;
  for (double scale : {0.25, 0.5, 1.0, 2.0}) {
    ParamVector other = base;
    axpy(scale, direction, other);
    double d2 = representation_distance(base, other, task.model, task.backbone,
                                        probe, DistanceMetric::Wasserstein);
    Vec mixed = matvec(task.model.mixing, scaled(direction, scale));
    CHECK(d2 == doctest::Approx(squared_norm(mixed)).epsilon(1e-9));
    CHECK(d2 > previous);
    previous = d2;
  }
}

TEST_CASE("median heuristic bandwidth is deterministic and positive") {
  RngStream rng(17, 0);
  RepresentationBatch a = make_batch(testing::random_points(rng, 5, 2));
  RepresentationBatch b = make_batch(testing::random_points(rng, 6, 2));
  double s1 = median_heuristic_bandwidth(a, b);
  double s2 = median_heuristic_bandwidth(a, b);
  CHECK(s1 == s2);
  CHECK(s1 > 0.0);
}

TEST_CASE("dimension mismatches are rejected") {
  RepresentationBatch a = make_batch({{0.0, 1.0}});
  RepresentationBatch b = make_batch({{0.0}});
  CHECK_THROWS_AS(mmd_squared(a, b, RbfKernel::median_heuristic()),
                  InvalidArgumentError);
  CHECK_THROWS_AS(wasserstein2_squared(a, b), InvalidArgumentError);
}

}  // TEST_SUITE
