#pragma once

#include <cstdint>
#include <random>

#include "dicpf/common.hpp"

namespace dicpf {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Seeded random stream. A stream is identified by (seed, stream id);
/// identical identity and call sequence give identical draws, and distinct
/// stream ids yield statistically independent streams. Experiments hand one
/// root stream per run and derive substreams for independent purposes.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    engine_.seed(seq);
  }

  /// Derived stream, independent of this one and of other ids.
  RngStream substream(std::uint64_t id) const {
    return RngStream(seed_, detail::mix64(stream_ ^ detail::mix64(id + 0x517cc1b727220a95ULL)));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// U[0, 1).
  double uniform() { return unif_(engine_); }

  /// Standard normal.
  double normal() { return norm_(engine_); }

  Vector normal_vector(int d) {
    Vector z(d);
    for (int i = 0; i < d; ++i) z(i) = norm_(engine_);
    return z;
  }

  long binomial(long n, double p) {
    if (n <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<long> dist(n, p);
    return dist(engine_);
  }

  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long> dist(mean);
    return dist(engine_);
  }

  double gamma(double shape, double scale) {
    std::gamma_distribution<double> dist(shape, scale);
    return dist(engine_);
  }

  /// NegBinomial(size r, prob p) with mean r(1-p)/p; real-valued r via the
  /// gamma-Poisson mixture.
  long neg_binomial(double r, double p) {
    if (r <= 0.0) return 0;
    const double lambda = gamma(r, (1.0 - p) / p);
    return poisson(lambda);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace dicpf
