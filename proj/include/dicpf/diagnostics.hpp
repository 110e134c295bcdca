#pragma once

#include <cmath>
#include <vector>

#include "dicpf/common.hpp"

namespace dicpf {

struct IactEstimate {
  double value = kNaN;
  bool diverged = false;
  int truncation_lag = 0;  // first lag excluded by the initial-positive-sequence rule
};

namespace detail {

inline double autocovariance(const Vector& x, double mean, int lag) {
  const Eigen::Index n = x.size();
  double acc = 0.0;
  for (Eigen::Index t = 0; t + lag < n; ++t) {
    acc += (x(t) - mean) * (x(t + lag) - mean);
  }
  return acc / static_cast<double>(n);
}

}  // namespace detail

/// Integrated autocorrelation time, 1 + 2 sum rho_k, truncated where the
/// sums of successive autocorrelation pairs first turn nonpositive
/// (initial positive sequence). Lags are computed on demand, so well-mixing
/// chains stop after a handful of autocovariance passes. Chains that are
/// constant, or whose pair sums stay positive beyond lag n/2, are flagged
/// divergent.
inline IactEstimate iact(const Vector& chain) {
  const Eigen::Index n = chain.size();
  if (n < 100) throw ChainTooShortError("iact: need at least 100 samples");
  const double mean = chain.mean();
  const double gamma0 = detail::autocovariance(chain, mean, 0);
  if (gamma0 <= 0.0) return {kNaN, true, 0};

  const int max_lag = static_cast<int>(n / 2);
  double total = 0.0;  // sum of positive pair sums (rho_{2m} + rho_{2m+1})
  for (int m = 0;; ++m) {
    const int lag_even = 2 * m;
    const int lag_odd = 2 * m + 1;
    if (lag_odd > max_lag) return {kNaN, true, lag_odd};
    const double pair = (detail::autocovariance(chain, mean, lag_even) +
                         detail::autocovariance(chain, mean, lag_odd)) /
                        gamma0;
    if (pair <= 0.0) return {2.0 * total - 1.0, false, lag_even};
    total += pair;
  }
}

inline double neff(double iact_value, Eigen::Index n) { return static_cast<double>(n) / iact_value; }

inline double neff(const Vector& chain) {
  const IactEstimate est = iact(chain);
  if (est.diverged) return 0.0;
  return neff(est.value, chain.size());
}

/// Inverse relative efficiency: IACT scaled by the particle count, a
/// cost-adjusted inefficiency for comparing runs with different N.
inline double ire(double iact_value, int n_particles) {
  return iact_value * static_cast<double>(n_particles);
}

/// First max_lag autocorrelations (lag 0 is exactly 1).
inline Vector acf(const Vector& chain, int max_lag = 50) {
  if (chain.size() < 2) throw ChainTooShortError("acf: need at least 2 samples");
  const double mean = chain.mean();
  const double gamma0 = detail::autocovariance(chain, mean, 0);
  Vector out(max_lag + 1);
  out(0) = 1.0;
  for (int k = 1; k <= max_lag; ++k) {
    out(k) = gamma0 > 0.0 ? detail::autocovariance(chain, mean, k) / gamma0 : 0.0;
  }
  return out;
}

struct MeanCi {
  double mean = kNaN;
  double lo = kNaN;
  double hi = kNaN;
  double se = kNaN;          // autocorrelation-inflated standard error
  bool degenerate = false;   // constant chain or divergent IACT
};

/// Confidence interval for the chain mean: mean +- z * sd * sqrt(iact / n).
inline MeanCi mean_ci(const Vector& chain, double level = 0.95) {
  const Eigen::Index n = chain.size();
  if (n < 100) throw ChainTooShortError("mean_ci: need at least 100 samples");
  MeanCi out;
  out.mean = chain.mean();
  const double sd = std::sqrt((chain.array() - out.mean).square().sum() / static_cast<double>(n - 1));
  if (sd == 0.0) {
    out.lo = out.hi = out.mean;
    out.se = 0.0;
    out.degenerate = true;
    return out;
  }
  const IactEstimate est = iact(chain);
  if (est.diverged) {
    out.degenerate = true;
    return out;
  }
  // two-sided normal quantile; bisection on erfc for non-default levels
  double quantile = 1.959963984540054;
  if (level != 0.95) {
    double lo_q = 0.0, hi_q = 10.0;
    const double tail = (1.0 - level) / 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo_q + hi_q);
      if (0.5 * std::erfc(mid / std::sqrt(2.0)) > tail) lo_q = mid; else hi_q = mid;
    }
    quantile = 0.5 * (lo_q + hi_q);
  }
  out.se = sd * std::sqrt(std::max(est.value, 0.0) / static_cast<double>(n));
  out.lo = out.mean - quantile * out.se;
  out.hi = out.mean + quantile * out.se;
  return out;
}

struct ChainStats {
  Eigen::Index n = 0;
  IactEstimate iact;
  double neff = kNaN;
  double ire = kNaN;
  MeanCi ci;
};

inline ChainStats chain_stats(const Vector& chain, int n_particles) {
  ChainStats s;
  s.n = chain.size();
  s.iact = dicpf::iact(chain);
  if (!s.iact.diverged) {
    s.neff = dicpf::neff(s.iact.value, s.n);
    s.ire = dicpf::ire(s.iact.value, n_particles);
  }
  s.ci = mean_ci(chain);
  return s;
}

}  // namespace dicpf
