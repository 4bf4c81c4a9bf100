#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "repmc/errors.hpp"

namespace repmc {

// Flat parameter vector theta and its paired momentum. Lengths are fixed for
// the duration of a run; invariants are enforced at operation boundaries.
using Vec = std::vector<double>;
using ParamVector = Vec;
using MomentumVector = Vec;

// Dense row-major matrix, just enough linear algebra for this project.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // rows * cols, row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  const double* row(std::size_t r) const { return values.data() + r * cols; }
  double* row(std::size_t r) { return values.data() + r * cols; }
};

// A set of representation vectors treated as an empirical distribution over
// representation space. Shared between the model and metrics layers.
struct RepresentationBatch {
  std::vector<Vec> points;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }
};

// Deterministic per-chain random stream. The (seed, stream_id) pair fully
// determines the sequence; distinct stream ids give independent streams, so
// results do not depend on how chains are scheduled. The engine is a
// mt19937_64 seeded through a splitmix64 mix of seed and stream id, and all
// variates are derived from raw 64-bit words so replay is bit-exact.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on [0, 1).
  double uniform();
  // Standard normal via Box-Muller; consumes exactly two engine words.
  double gaussian();
  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);

  // m distinct indices drawn uniformly without replacement from [0, n).
  std::vector<std::size_t> sample_without_replacement(std::size_t m,
                                                      std::size_t n);

  // Instrumentation: number of gaussian variates handed out so far. Used by
  // tests to verify that exploration iterations draw no noise.
  std::uint64_t gaussian_draw_count() const { return gaussian_draws_; }

 private:
  std::uint64_t next_word();

  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::mt19937_64 engine_;
  std::uint64_t gaussian_draws_ = 0;
};

// dim i.i.d. standard normal draws; advances the stream deterministically.
Vec gaussian_noise(RngStream& rng, std::size_t dim);

// Central finite differences (f(x+h e_i) - f(x-h e_i)) / (2h), the shared
// testing oracle for every analytic gradient in the project.
inline constexpr double kDefaultFdStep = 1e-5;
inline constexpr double kDefaultFdRtol = 1e-4;

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f,
                               const Vec& x, double h = kDefaultFdStep);

// Small vector helpers used throughout.
double dot(const Vec& a, const Vec& b);
double squared_norm(const Vec& v);
double norm(const Vec& v);
Vec sub(const Vec& a, const Vec& b);
Vec add(const Vec& a, const Vec& b);
void axpy(double alpha, const Vec& x, Vec& y);  // y += alpha * x
Vec scaled(const Vec& v, double alpha);
bool all_finite(const Vec& v);

// y = M x   (len(x) == cols, result rows)
Vec matvec(const Matrix& m, const Vec& x);
// y = M^T x (len(x) == rows, result cols)
Vec matvec_transpose(const Matrix& m, const Vec& x);

void require(bool condition, const std::string& message);

}  // namespace repmc
