#pragma once

#include <algorithm>
#include <cmath>

#include "dicpf/common.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

struct NormalizedWeights {
  Vector probs;     // nonnegative, sums to one
  double log_sum;   // log sum_i exp(lw_i)
  double log_mean;  // log mean_i exp(lw_i)
};

/// Normalises a vector of log weights into probabilities. Computed with
/// max-subtraction so arbitrarily small potentials survive; invariant under
/// adding a constant to every entry.
inline NormalizedWeights normalize_weights(const Vector& log_weights) {
  const Eigen::Index n = log_weights.size();
  if (n < 1) throw ConfigError("normalize_weights: empty weight vector");
  double max_lw = kNegInf;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (log_weights(i) > max_lw) max_lw = log_weights(i);
  }
  if (max_lw == kNegInf) {
    throw AllWeightsZeroError("normalize_weights: every log weight is -inf");
  }
  // scalar std::exp: the vectorised variant does not flush -inf to zero
  Vector probs(n);
  for (Eigen::Index i = 0; i < n; ++i) probs(i) = std::exp(log_weights(i) - max_lw);
  const double sum = probs.sum();
  probs /= sum;
  const double log_sum = max_lw + std::log(sum);
  return {std::move(probs), log_sum, log_sum - std::log(static_cast<double>(n))};
}

/// One draw from Categ(probs). Returns a zero-based index.
inline int categorical_sample(RngStream& rng, const Vector& probs) {
  const double u = rng.uniform();
  double cum = 0.0;
  int last_positive = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs(i);
    if (p <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cum += p;
    if (u < cum) return static_cast<int>(i);
  }
  // Rounding slack in the cumulative sum; fall back to the top of the support.
  if (last_positive < 0) throw ConfigError("categorical_sample: no positive probability");
  return last_positive;
}

/// Fills `out` with independent Categ(probs) draws, O(log N) per draw.
inline void categorical_sample_many(RngStream& rng, const Vector& probs,
                                    Eigen::Ref<IndexVector> out) {
  const Eigen::Index n = probs.size();
  Vector cum(n);
  double acc = 0.0;
  int last_positive = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (probs(i) > 0.0) last_positive = static_cast<int>(i);
    acc += probs(i);
    cum(i) = acc;
  }
  if (last_positive < 0) throw ConfigError("categorical_sample_many: no positive probability");
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    const double u = rng.uniform() * acc;
    const double* begin = cum.data();
    const double* it = std::upper_bound(begin, begin + n, u);
    int idx = static_cast<int>(it - begin);
    if (idx > last_positive) idx = last_positive;
    out(j) = idx;
  }
}

}  // namespace dicpf
