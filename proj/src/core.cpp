#include "repmc/core.hpp"

#include <cmath>
#include <numbers>

namespace repmc {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  // Split the root seed into an independent per-stream seed.
  std::uint64_t s = seed;
  std::uint64_t mixed = splitmix64(s) ^ splitmix64(stream_id) ^
                        (stream_id * 0xD1B54A32D192ED03ULL);
  std::uint64_t m = mixed;
  engine_.seed(splitmix64(m));
}

std::uint64_t RngStream::next_word() { return engine_(); }

double RngStream::uniform() {
  // 53-bit mantissa in [0, 1).
  return static_cast<double>(next_word() >> 11) * 0x1.0p-53;
}

double RngStream::gaussian() {
  // Box-Muller, cosine branch. u1 lies in (0, 1] so the log is finite.
  double u1 = (static_cast<double>(next_word() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(next_word() >> 11) * 0x1.0p-53;
  ++gaussian_draws_;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t RngStream::uniform_index(std::size_t n) {
  require(n > 0, "uniform_index: n must be positive");
  // Multiply-shift map of a 64-bit word onto [0, n).
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(next_word()) * n) >> 64);
}

std::vector<std::size_t> RngStream::sample_without_replacement(std::size_t m,
                                                               std::size_t n) {
  require(m >= 1 && m <= n, "sample_without_replacement: need 1 <= m <= n");
  // Partial Fisher-Yates over an index pool.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + uniform_index(n - i);
    std::swap(pool[i], pool[j]);
    out[i] = pool[i];
  }
  return out;
}

Vec gaussian_noise(RngStream& rng, std::size_t dim) {
  require(dim >= 1, "gaussian_noise: dim must be >= 1");
  Vec out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = rng.gaussian();
  return out;
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f,
                               const Vec& x, double h) {
  require(h > 0.0, "finite_difference_gradient: h must be positive");
  Vec grad(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double xi = x[i];
    probe[i] = xi + h;
    double fp = f(probe);
    probe[i] = xi - h;
    double fm = f(probe);
    probe[i] = xi;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw InvalidArgumentError(
          "finite_difference_gradient: function evaluated to a non-finite "
          "value");
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm(const Vec& v) { return std::sqrt(squared_norm(v)); }

Vec sub(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "sub: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec add(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "add: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

void axpy(double alpha, const Vec& x, Vec& y) {
  require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vec scaled(const Vec& v, double alpha) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = alpha * v[i];
  return out;
}

bool all_finite(const Vec& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Vec matvec(const Matrix& m, const Vec& x) {
  require(x.size() == m.cols, "matvec: dimension mismatch");
  Vec out(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
  return out;
}

Vec matvec_transpose(const Matrix& m, const Vec& x) {
  require(x.size() == m.rows, "matvec_transpose: dimension mismatch");
  Vec out(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    double xr = x[r];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * xr;
  }
  return out;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgumentError(message);
}

}  // namespace repmc
