#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dicpf/common.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/model.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

/// Discrete-time stochastic SEIR compartment model with a random-walk
/// transformed reproduction number. State vector (S, E, I, R, rho), where
/// R0 = r0_max * logit^-1(rho). One step:
///   dE ~ Binom(S, 1 - exp(-beta_k I / popsize)),  beta_k = R0_k * p_gamma,
///   dI ~ Binom(E, p_a),   dR ~ Binom(I, p_gamma),
///   rho' = rho + N(0, rw_sd^2),
/// with p_a = 1 - exp(-incubation_rate), p_gamma = 1 - exp(-recovery_rate).
/// Counts are observed through a negative binomial with mean
/// sampling_effort * p_gamma * I_k.
struct SeirParams {
  double popsize = 1638469;
  double r0_max = 10.0;
  double incubation_rate = 1.0 / 3.0;
  double recovery_rate = 1.0 / 7.0;
  double sampling_effort = 0.15;
  double obs_failure_prob = 0.135;  // p of the negative binomial
  double rw_sd = 0.135;             // sigma of the rho random walk
};

namespace seir {
enum Index { kS = 0, kE = 1, kI = 2, kR = 3, kRho = 4 };
inline constexpr int kDim = 5;
inline constexpr int kFreeDim = 3;  // proposal coordinates (rho, E, I)
}  // namespace seir

/// Initial constraint set: S + E + I = popsize, R = 0, all compartments
/// nonnegative integers, rho unconstrained. Proposals move in (rho, E, I);
/// reconstruction rounds E and I and sets S = popsize - E - I, R = 0.
inline Domain seir_initial_domain(double popsize) {
  auto indicator = [popsize](const Vector& x) {
    const double s = x(seir::kS), e = x(seir::kE), i = x(seir::kI), r = x(seir::kR);
    if (s < 0.0 || e < 0.0 || i < 0.0) return false;
    if (r != 0.0) return false;
    if (s + e + i != popsize) return false;
    return e == std::floor(e) && i == std::floor(i);
  };
  auto to_free = [](const Vector& x) {
    Vector z(seir::kFreeDim);
    z << x(seir::kRho), x(seir::kE), x(seir::kI);
    return z;
  };
  auto from_free = [popsize](const Vector& z) {
    const double e = std::round(z(1));
    const double i = std::round(z(2));
    Vector x(seir::kDim);
    x << popsize - e - i, e, i, 0.0, z(0);
    return x;
  };
  return Domain::custom(seir::kDim, seir::kFreeDim, indicator, to_free, from_free);
}

class SeirModel {
 public:
  SeirModel(SeirParams params, Vector counts) : params_(params), counts_(std::move(counts)) {
    if (params_.popsize < 1.0) throw ConfigError("SeirModel: popsize must be positive");
    if (params_.obs_failure_prob <= 0.0 || params_.obs_failure_prob >= 1.0) {
      throw ConfigError("SeirModel: obs_failure_prob must be in (0, 1)");
    }
    if (params_.rw_sd <= 0.0) throw ConfigError("SeirModel: rw_sd must be positive");
    if (params_.sampling_effort <= 0.0 || params_.sampling_effort > 1.0) {
      throw ConfigError("SeirModel: sampling_effort must be in (0, 1]");
    }
    for (Eigen::Index k = 0; k < counts_.size(); ++k) {
      if (counts_(k) < 0.0 || counts_(k) != std::floor(counts_(k))) {
        throw ConfigError("SeirModel: counts must be nonnegative integers");
      }
    }
    p_incubation_ = 1.0 - std::exp(-params_.incubation_rate);
    p_recovery_ = 1.0 - std::exp(-params_.recovery_rate);
    initial_ = InitialMeasure::uniform_improper(seir_initial_domain(params_.popsize));
  }

  int num_steps() const { return static_cast<int>(counts_.size()); }
  int state_dim() const { return seir::kDim; }
  const InitialMeasure& initial() const { return initial_; }
  const SeirParams& params() const { return params_; }
  double p_incubation() const { return p_incubation_; }
  double p_recovery() const { return p_recovery_; }

  double infection_prob(double rho, double infected) const {
    const double beta = params_.r0_max * inv_logit(rho) * p_recovery_;
    return 1.0 - std::exp(-beta * infected / params_.popsize);
  }

  Vector sample_transition(int, const Vector& prev, RngStream& rng) const {
    const double de = static_cast<double>(
        rng.binomial(static_cast<long>(prev(seir::kS)), infection_prob(prev(seir::kRho), prev(seir::kI))));
    const double di = static_cast<double>(rng.binomial(static_cast<long>(prev(seir::kE)), p_incubation_));
    const double dr = static_cast<double>(rng.binomial(static_cast<long>(prev(seir::kI)), p_recovery_));
    Vector next(seir::kDim);
    next(seir::kS) = prev(seir::kS) - de;
    next(seir::kE) = prev(seir::kE) + de - di;
    next(seir::kI) = prev(seir::kI) + di - dr;
    next(seir::kR) = prev(seir::kR) + dr;
    next(seir::kRho) = prev(seir::kRho) + params_.rw_sd * rng.normal();
    if (next(seir::kS) < 0.0 || next(seir::kE) < 0.0 || next(seir::kI) < 0.0) {
      throw InvalidCountsError("SeirModel: compartment went negative");
    }
    return next;
  }

  /// Product of the three binomial flow pmfs and the Gaussian rho increment;
  /// -inf for any pair of states not connected by admissible flows.
  double log_transition_density(int, const Vector& prev, const Vector& cur) const {
    const double de = prev(seir::kS) - cur(seir::kS);
    const double di = prev(seir::kE) + de - cur(seir::kE);
    const double dr = prev(seir::kI) + di - cur(seir::kI);
    if (cur(seir::kR) != prev(seir::kR) + dr) return kNegInf;
    double total = binomial_logpmf(de, prev(seir::kS), infection_prob(prev(seir::kRho), prev(seir::kI)));
    if (total == kNegInf) return kNegInf;
    total += binomial_logpmf(di, prev(seir::kE), p_incubation_);
    if (total == kNegInf) return kNegInf;
    total += binomial_logpmf(dr, prev(seir::kI), p_recovery_);
    if (total == kNegInf) return kNegInf;
    return total + gaussian_logpdf(cur(seir::kRho), prev(seir::kRho), params_.rw_sd);
  }

  bool has_transition_density() const { return true; }

  /// Negative binomial size for a given infected count; mean of the
  /// observation is sampling_effort * p_recovery * I.
  double obs_size(double infected) const {
    const double p = params_.obs_failure_prob;
    return params_.sampling_effort * p_recovery_ * (p / (1.0 - p)) * infected;
  }

  double log_potential(int k, const Vector&, const Vector& cur) const {
    return neg_binomial_logpmf(counts_(k - 1), obs_size(cur(seir::kI)), params_.obs_failure_prob);
  }

 private:
  SeirParams params_;
  Vector counts_;
  double p_incubation_ = 0.0;
  double p_recovery_ = 0.0;
  InitialMeasure initial_;
};

inline SeirModel make_seir(const SeirParams& params, Vector counts) {
  return SeirModel(params, std::move(counts));
}

/// rho path for a piecewise-constant R0 schedule: `breaks` holds the first
/// time index (1-based) of each segment, `values` the R0 level on it.
inline Vector piecewise_r0_path(int T, const std::vector<int>& breaks,
                                const std::vector<double>& values, double r0_max) {
  if (breaks.size() != values.size() || breaks.empty() || breaks.front() != 1) {
    throw ConfigError("piecewise_r0_path: breaks must start at 1 and match values");
  }
  Vector rho(T);
  std::size_t seg = 0;
  for (int t = 1; t <= T; ++t) {
    while (seg + 1 < breaks.size() && t >= breaks[seg + 1]) ++seg;
    rho(t - 1) = logit(values[seg] / r0_max);
  }
  return rho;
}

/// Hyperparameter block for particle Gibbs on the SEIR model:
/// theta = (log rw_sd, logit obs_failure_prob), with independent Gaussian
/// priors directly on the transformed coordinates.
struct SeirHyper {
  SeirParams base;
  Vector counts;
  double log_sigma_prior_mean = -2.0;
  double log_sigma_prior_sd = 0.3;
  double logit_p_prior_mean = 0.0;
  double logit_p_prior_sd = 10.0;

  int dim() const { return 2; }

  double log_prior(const Vector& theta) const {
    return gaussian_logpdf(theta(0), log_sigma_prior_mean, log_sigma_prior_sd) +
           gaussian_logpdf(theta(1), logit_p_prior_mean, logit_p_prior_sd);
  }

  SeirModel make_model(const Vector& theta) const {
    SeirParams params = base;
    params.rw_sd = std::exp(theta(0));
    params.obs_failure_prob = inv_logit(theta(1));
    return SeirModel(params, counts);
  }
};

struct SeirSimulation {
  Matrix latent;  // 5 x T, states (S, E, I, R, rho)
  Vector counts;  // observed cases per day
};

/// Simulates compartments and observations along a prescribed rho path,
/// starting from initial exposed/infected counts (S fills the remainder,
/// R starts at zero).
inline SeirSimulation simulate_seir(const SeirParams& params, const Vector& rho_path,
                                    double e1, double i1, RngStream& rng) {
  const int T = static_cast<int>(rho_path.size());
  SeirModel model(params, Vector::Zero(T));  // transition machinery only
  Matrix latent(seir::kDim, T);
  latent.col(0) << params.popsize - e1 - i1, e1, i1, 0.0, rho_path(0);
  for (int k = 1; k < T; ++k) {
    Vector next = model.sample_transition(k + 1, latent.col(k - 1), rng);
    next(seir::kRho) = rho_path(k);  // prescribed, not random-walk
    latent.col(k) = next;
  }
  Vector counts(T);
  for (int k = 0; k < T; ++k) {
    counts(k) = static_cast<double>(
        rng.neg_binomial(model.obs_size(latent(seir::kI, k)), params.obs_failure_prob));
  }
  return {std::move(latent), std::move(counts)};
}

}  // namespace dicpf
