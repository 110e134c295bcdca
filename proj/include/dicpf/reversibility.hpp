#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dicpf/common.hpp"
#include "dicpf/init_kernels.hpp"
#include "dicpf/rng.hpp"
#include "dicpf/stat_tests.hpp"

namespace dicpf {

struct ProjectionTest {
  std::string name;
  double statistic = 0.0;
  double p_value = 1.0;
};

struct ReversibilityReport {
  long n_pairs = 0;
  std::vector<ProjectionTest> tests;

  double min_p() const {
    double p = 1.0;
    for (const auto& t : tests) p = std::min(p, t.p_value);
    return p;
  }
  /// alpha is applied per projection.
  bool passed(double alpha) const { return min_p() > alpha; }
};

/// Statistical check of detailed balance. Draws pairs (X0, X1) with
/// X0 from the supplied start sampler (exact or approximately stationary
/// draws from the target measure) and X1 ~ Q(X0, .). Under reversibility the
/// pair is exchangeable, so every antisymmetric projection f(X0,X1) - f(X1,X0)
/// has mean zero; each projection yields a paired z-test. A two-sample KS
/// test on the swapped marginals (independent halves) adds a
/// distribution-level check.
///
/// Projections per coordinate i: first moments (X1_i - X0_i) and second
/// moments (X1_i^2 - X0_i^2); for every pair i < j the antisymmetric cross
/// moment X0_i X1_j - X1_i X0_j.
template <typename Kernel, typename StartSampler>
ReversibilityReport reversibility_test(const Kernel& kernel, StartSampler&& draw_start,
                                       long n_pairs, RngStream& rng) {
  if (n_pairs < 100) throw ConfigError("reversibility_test: need at least 100 pairs");

  std::vector<Vector> x0(n_pairs), x1(n_pairs);
  for (long t = 0; t < n_pairs; ++t) {
    x0[t] = draw_start(rng);
    x1[t] = kernel.sample(x0[t], rng);
  }
  const int d = static_cast<int>(x0[0].size());

  ReversibilityReport report;
  report.n_pairs = n_pairs;

  auto paired_z = [&](const std::string& name, auto&& f) {
    double mean = 0.0, m2 = 0.0;
    for (long t = 0; t < n_pairs; ++t) {
      const double v = f(x0[t], x1[t]) - f(x1[t], x0[t]);
      const double delta = v - mean;
      mean += delta / static_cast<double>(t + 1);
      m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(n_pairs - 1);
    const double se = std::sqrt(var / static_cast<double>(n_pairs));
    const double z = se > 0.0 ? mean / se : 0.0;
    report.tests.push_back({name, z, normal_two_sided_p(z)});
  };

  for (int i = 0; i < d; ++i) {
    paired_z("mean-diff[" + std::to_string(i) + "]",
             [i](const Vector& a, const Vector&) { return a(i); });
    paired_z("square-diff[" + std::to_string(i) + "]",
             [i](const Vector& a, const Vector&) { return a(i) * a(i); });
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      paired_z("cross-diff[" + std::to_string(i) + "," + std::to_string(j) + "]",
               [i, j](const Vector& a, const Vector& b) { return a(i) * b(j); });
    }
  }

  // Marginal KS on independent halves: {X0 from the first half} against
  // {X1 from the second half}.
  const long half = n_pairs / 2;
  for (int i = 0; i < d; ++i) {
    std::vector<double> a(half), b(half);
    for (long t = 0; t < half; ++t) {
      a[t] = x0[t](i);
      b[t] = x1[half + t](i);
    }
    const KsResult ks = ks_test_two_sample(std::move(a), std::move(b));
    report.tests.push_back({"marginal-ks[" + std::to_string(i) + "]", ks.statistic, ks.p_value});
  }
  return report;
}

/// Start sampler backed by a long kernel chain: burn in once, then advance
/// `thin` steps per draw. Supplies approximately stationary starts when the
/// target admits no exact sampler.
template <typename Kernel>
class StationaryChainSampler {
 public:
  StationaryChainSampler(const Kernel& kernel, Vector init, int burn_in, int thin)
      : kernel_(kernel), state_(std::move(init)), burn_in_(burn_in), thin_(thin) {}

  Vector operator()(RngStream& rng) {
    const int steps = burned_ ? thin_ : burn_in_;
    burned_ = true;
    for (int s = 0; s < steps; ++s) state_ = kernel_.sample(state_, rng);
    return state_;
  }

 private:
  const Kernel& kernel_;
  Vector state_;
  int burn_in_;
  int thin_;
  bool burned_ = false;
};

}  // namespace dicpf
