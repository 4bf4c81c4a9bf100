#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "repmc/potentials.hpp"

using namespace repmc;

namespace {

GaussianMixture symmetric_bimodal(double sep = 3.0, double var = 0.5) {
  GaussianMixture gm;
  gm.means = {{-sep, 0.0}, {sep, 0.0}};
  gm.variances = {{var, var}, {var, var}};
  gm.weights = {0.5, 0.5};
  return gm;
}

GaussianMixture random_mixture(RngStream& rng, std::size_t comps,
                               std::size_t dim) {
  GaussianMixture gm;
  double wsum = 0.0;
  for (std::size_t k = 0; k < comps; ++k) {
    gm.means.push_back(gaussian_noise(rng, dim));
    Vec var = gaussian_noise(rng, dim);
    for (double& v : var) v = 0.3 + std::abs(v);
    gm.variances.push_back(var);
    double w = 0.2 + rng.uniform();
    gm.weights.push_back(w);
    wsum += w;
  }
  for (double& w : gm.weights) w /= wsum;
  return gm;
}

}  // namespace

TEST_SUITE("potentials") {

TEST_CASE("symmetric two-mode mixture has equal potential at both modes") {
  GaussianMixture gm = symmetric_bimodal();
  CHECK(mixture_potential(gm, gm.means[0]) ==
        doctest::Approx(mixture_potential(gm, gm.means[1])).epsilon(1e-12));
}

TEST_CASE("standard normal at the origin") {
  GaussianMixture gm;
  const std::size_t d = 3;
  gm.means = {Vec(d, 0.0)};
  gm.variances = {Vec(d, 1.0)};
  gm.weights = {1.0};
  double expected = 0.5 * d * std::log(2.0 * std::numbers::pi);
  CHECK(mixture_potential(gm, Vec(d, 0.0)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient vanishes at the midpoint of symmetric modes") {
  GaussianMixture gm = symmetric_bimodal();
  Vec g = mixture_potential_grad(gm, {0.0, 0.0});
  CHECK(std::abs(g[0]) < 1e-12);
  CHECK(std::abs(g[1]) < 1e-12);
}

TEST_CASE("single standard Gaussian has gradient theta") {
  GaussianMixture gm;
  gm.means = {{0.0, 0.0}};
  gm.variances = {{1.0, 1.0}};
  gm.weights = {1.0};
  Vec theta = {0.7, -1.3};
  Vec g = mixture_potential_grad(gm, theta);
  CHECK(testing::grads_close(theta, g, 1e-12, 1e-12));
}

TEST_CASE("gradient is numerically zero at a far-isolated mode center") {
  // Modes 20 standard deviations apart.
  GaussianMixture gm = symmetric_bimodal(10.0, 1.0);
  Vec g = mixture_potential_grad(gm, gm.means[0]);
  CHECK(norm(g) < 1e-8);
}

TEST_CASE("mixture gradient matches finite differences on random instances") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 20; ++rep) {
    GaussianMixture gm = random_mixture(rng, 3, 2);
    Vec theta = gaussian_noise(rng, 2);
    Vec analytic = mixture_potential_grad(gm, theta);
    Vec fd = finite_difference_gradient(
        [&](const Vec& x) { return mixture_potential(gm, x); }, theta);
    CHECK(testing::grads_close(analytic, fd, 1e-6));
  }
}

TEST_CASE("mixture potential is invariant under component permutation") {
  RngStream rng(13, 0);
  GaussianMixture gm = random_mixture(rng, 4, 3);
  GaussianMixture permuted;
  for (std::size_t k : {2, 0, 3, 1}) {
    permuted.means.push_back(gm.means[k]);
    permuted.variances.push_back(gm.variances[k]);
    permuted.weights.push_back(gm.weights[k]);
  }
  Vec theta = gaussian_noise(rng, 3);
  CHECK(mixture_potential(gm, theta) ==
        doctest::Approx(mixture_potential(permuted, theta)).epsilon(1e-14));
}

TEST_CASE("dimension mismatch is rejected") {
  GaussianMixture gm = symmetric_bimodal();
  CHECK_THROWS_AS(mixture_potential(gm, {1.0, 2.0, 3.0}), InvalidArgumentError);
  CHECK_THROWS_AS(mixture_potential_grad(gm, {1.0}), InvalidArgumentError);
}

TEST_CASE("full batch collapses the estimator") {
  PotentialSpec spec{PotentialKind::Classifier, 0.3, 6};
  auto nll = [](std::size_t i, const ParamVector& th) {
    return static_cast<double>(i + 1) * th[0] * th[0];
  };
  MiniBatch full;
  full.indices = {0, 1, 2, 3, 4, 5};
  ParamVector theta = {0.5};
  double expected = 21.0 * 0.25 + 0.5 * 0.3 * 0.25;
  CHECK(minibatch_potential(spec, nll, full, theta) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("estimator is unbiased by exhaustive batch enumeration") {
  // 6-point dataset, all (6 choose 2) batches of size 2.
  PotentialSpec spec{PotentialKind::Classifier, 0.7, 6};
  auto nll = [](std::size_t i, const ParamVector& th) {
    return std::sin(static_cast<double>(i)) + th[0] * static_cast<double>(i);
  };
  ParamVector theta = {1.3};

  MiniBatch full;
  for (std::size_t i = 0; i < 6; ++i) full.indices.push_back(i);
  double full_value = minibatch_potential(spec, nll, full, theta);

  double mean = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i + 1; j < 6; ++j) {
      MiniBatch b;
      b.indices = {i, j};
      mean += minibatch_potential(spec, nll, b, theta);
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  CHECK(std::abs(mean - full_value) < 1e-10);
}

TEST_CASE("zero losses and zero prior give zero") {
  PotentialSpec spec{PotentialKind::Classifier, 0.0, 5};
  auto nll = [](std::size_t, const ParamVector&) { return 0.0; };
  MiniBatch b;
  b.indices = {1, 3};
  CHECK(minibatch_potential(spec, nll, b, {2.0, -1.0}) == 0.0);
}

TEST_CASE("duplicating every batch example leaves the estimator unchanged") {
  PotentialSpec spec{PotentialKind::Classifier, 0.1, 8};
  auto nll = [](std::size_t i, const ParamVector& th) {
    return th[0] / (1.0 + static_cast<double>(i));
  };
  ParamVector theta = {0.9};
  MiniBatch once, twice;
  once.indices = {2, 5};
  twice.indices = {2, 2, 5, 5};
  CHECK(minibatch_potential(spec, nll, once, theta) ==
        doctest::Approx(minibatch_potential(spec, nll, twice, theta))
            .epsilon(1e-14));
}

TEST_CASE("zero-loss model with positive prior has gradient lambda * theta") {
  PotentialSpec spec{PotentialKind::Classifier, 0.25, 4};
  auto grad = [](std::size_t, const ParamVector& th) {
    return Vec(th.size(), 0.0);
  };
  MiniBatch b;
  b.indices = {0, 2};
  ParamVector theta = {2.0, -4.0};
  Vec g = minibatch_potential_grad(spec, grad, b, theta);
  CHECK(g[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-14));
}

TEST_CASE("minibatch gradient matches finite differences") {
  RngStream rng(17, 0);
  PotentialSpec spec{PotentialKind::Classifier, 0.4, 7};
  // Smooth synthetic per-example loss with analytic gradient.
  auto nll = [](std::size_t i, const ParamVector& th) {
    double a = 0.5 + static_cast<double>(i);
    return std::log(1.0 + a * th[0] * th[0]) + std::cos(th[1]) * a;
  };
  auto nll_grad = [](std::size_t i, const ParamVector& th) {
    double a = 0.5 + static_cast<double>(i);
    return Vec{2.0 * a * th[0] / (1.0 + a * th[0] * th[0]),
               -std::sin(th[1]) * a};
  };
  for (int rep = 0; rep < 20; ++rep) {
    Vec theta = gaussian_noise(rng, 2);
    MiniBatch b;
    b.indices = rng.sample_without_replacement(3, 7);
    Vec analytic = minibatch_potential_grad(spec, nll_grad, b, theta);
    Vec fd = finite_difference_gradient(
        [&](const Vec& x) { return minibatch_potential(spec, nll, b, x); },
        theta);
    CHECK(testing::grads_close(analytic, fd, 1e-6));
  }
}

TEST_CASE("empty batch is rejected") {
  PotentialSpec spec{PotentialKind::Classifier, 0.0, 3};
  auto nll = [](std::size_t, const ParamVector&) { return 1.0; };
  MiniBatch empty;
  CHECK_THROWS_AS(minibatch_potential(spec, nll, empty, {1.0}),
                  InvalidArgumentError);
}

TEST_CASE("invalid mixtures are rejected") {
  GaussianMixture gm = symmetric_bimodal();
  gm.weights = {0.6, 0.6};
  CHECK_THROWS_AS(gm.validate(), InvalidArgumentError);
  gm = symmetric_bimodal();
  gm.variances[0][1] = 0.0;
  CHECK_THROWS_AS(gm.validate(), InvalidArgumentError);
}

}  // TEST_SUITE
