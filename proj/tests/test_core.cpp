#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "repmc/core.hpp"

using namespace repmc;

TEST_SUITE("core") {

TEST_CASE("rng replay is bit-identical") {
  RngStream a(1, 0);
  RngStream b(1, 0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.uniform() == b.uniform());
  }
  RngStream c(1, 0);
  RngStream d(1, 0);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.gaussian() == d.gaussian());
  }
}

TEST_CASE("distinct stream ids give distinct, decorrelated streams") {
  RngStream a(1, 0);
  RngStream b(1, 1);
  double cov = 0.0, ma = 0.0, mb = 0.0;
  const int n = 100000;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = a.gaussian();
    ys[i] = b.gaussian();
    ma += xs[i] / n;
    mb += ys[i] / n;
  }
  for (int i = 0; i < n; ++i) cov += (xs[i] - ma) * (ys[i] - mb) / n;
  CHECK(std::abs(cov) < 0.02);
  CHECK(xs != ys);
}

TEST_CASE("gaussian_noise contracts") {
  RngStream rng(1, 0);
  Vec first = gaussian_noise(rng, 2);
  Vec second = gaussian_noise(rng, 2);
  CHECK(first != second);

  RngStream replay(1, 0);
  CHECK(gaussian_noise(replay, 2) == first);
  CHECK(gaussian_noise(replay, 2) == second);

  CHECK_THROWS_AS(gaussian_noise(rng, 0), InvalidArgumentError);
}

TEST_CASE("gaussian_noise moments over 1e6 draws") {
  RngStream rng(42, 0);
  const std::size_t n = 1000000;
  double mean = 0.0;
  std::vector<double> draws(n);
  for (std::size_t i = 0; i < n; ++i) {
    draws[i] = rng.gaussian();
    mean += draws[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n);

  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("sample_without_replacement yields distinct valid indices") {
  RngStream rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    auto idx = rng.sample_without_replacement(5, 12);
    CHECK(idx.size() == 5);
    std::sort(idx.begin(), idx.end());
    CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
    CHECK(idx.back() < 12);
  }
}

TEST_CASE("finite differences: quadratic is exact") {
  auto f = [](const Vec& x) { return 0.5 * squared_norm(x); };
  Vec grad = finite_difference_gradient(f, {1.0, 2.0}, 1e-5);
  CHECK(std::abs(grad[0] - 1.0) < 1e-8);
  CHECK(std::abs(grad[1] - 2.0) < 1e-8);
}

TEST_CASE("finite differences: constant and sin") {
  auto c = [](const Vec&) { return 3.5; };
  Vec zero = finite_difference_gradient(c, {0.3, -2.0, 5.0});
  for (double g : zero) CHECK(g == 0.0);

  auto s = [](const Vec& x) { return std::sin(x[0]); };
  Vec grad = finite_difference_gradient(s, {0.0}, 1e-5);
  CHECK(std::abs(grad[0] - 1.0) < 1e-9);
}

TEST_CASE("finite differences exact on random degree-2 polynomials") {
  RngStream rng(7, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = 3;
    Vec a = gaussian_noise(rng, d);
    Vec q = gaussian_noise(rng, d);
    auto f = [&](const Vec& x) {
      double v = 0.0;
      for (std::size_t i = 0; i < d; ++i) v += a[i] * x[i] + q[i] * x[i] * x[i];
      return v;
    };
    Vec x = gaussian_noise(rng, d);
    Vec fd = finite_difference_gradient(f, x);
    Vec exact(d);
    for (std::size_t i = 0; i < d; ++i) exact[i] = a[i] + 2.0 * q[i] * x[i];
    CHECK(testing::grads_close(exact, fd, 1e-8, 1e-8));
  }
}

TEST_CASE("finite differences propagate non-finite evaluations") {
  auto f = [](const Vec& x) { return std::log(x[0]); };
  CHECK_THROWS_AS(finite_difference_gradient(f, {0.0}), InvalidArgumentError);
}

TEST_CASE("matvec and its transpose") {
  Matrix m(2, 3);
  m.values = {1, 2, 3, 4, 5, 6};
  Vec y = matvec(m, {1.0, 0.0, -1.0});
  CHECK(y == Vec{-2.0, -2.0});
  Vec z = matvec_transpose(m, {1.0, 1.0});
  CHECK(z == Vec{5.0, 7.0, 9.0});
  CHECK_THROWS_AS(matvec(m, {1.0}), InvalidArgumentError);
}

}  // TEST_SUITE
