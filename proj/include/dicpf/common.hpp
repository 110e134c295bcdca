#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dicpf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVector = Eigen::VectorXi;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every particle weight is zero: total degeneracy, the run cannot continue.
class AllWeightsZeroError : public Error {
 public:
  using Error::Error;
};

/// A normalised draw was requested from an improper initial measure.
class ImproperM1Error : public Error {
 public:
  using Error::Error;
};

/// Metropolis-Hastings chain started outside the support of its target.
class StartOutsideDomainError : public Error {
 public:
  using Error::Error;
};

/// Adaptation rule fed with data from an incompatible path selector.
class SelectorMismatchError : public Error {
 public:
  using Error::Error;
};

/// Invalid run or experiment configuration; the message names the field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Chain too short for the requested diagnostic.
class ChainTooShortError : public Error {
 public:
  using Error::Error;
};

/// A log-target evaluated to NaN.
class NonFiniteTargetError : public Error {
 public:
  using Error::Error;
};

/// Compartment counts became inconsistent (negative or non-conserving).
class InvalidCountsError : public Error {
 public:
  using Error::Error;
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double inv_logit(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log N(x; mean, sd^2) for scalar x.
inline double gaussian_logpdf(double x, double mean, double sd) {
  static const double kLog2Pi = std::log(2.0 * M_PI);
  const double z = (x - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

/// log C(n, k) via lgamma.
inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// log Binomial(k; n, p), -inf outside {0..n}.
inline double binomial_logpmf(double k, double n, double p) {
  if (k < 0.0 || k > n) return kNegInf;
  if (p <= 0.0) return k == 0.0 ? 0.0 : kNegInf;
  if (p >= 1.0) return k == n ? 0.0 : kNegInf;
  return log_choose(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
}

/// log NegBinomial(y; size r, prob p) with mean r(1-p)/p.
/// r == 0 is the point mass at zero.
inline double neg_binomial_logpmf(double y, double r, double p) {
  if (y < 0.0) return kNegInf;
  if (r == 0.0) return y == 0.0 ? 0.0 : kNegInf;
  return std::lgamma(y + r) - std::lgamma(r) - std::lgamma(y + 1.0) +
         r * std::log(p) + y * std::log1p(-p);
}

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

}  // namespace dicpf
