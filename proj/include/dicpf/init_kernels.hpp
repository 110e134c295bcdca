#pragma once

#include <cmath>
#include <utility>

#include "dicpf/common.hpp"
#include "dicpf/domain.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

/// Auxiliary initialisation kernel concept: a Markov transition Q on the
/// state space, reversible with respect to the model's initial measure.
template <typename K>
concept InitKernel = requires(const K& k, const Vector& x, RngStream& rng) {
  { k.sample(x, rng) } -> std::convertible_to<Vector>;
  { k.is_exact_m1_draw() } -> std::convertible_to<bool>;
};

/// Autoregressive kernel for a Gaussian initial measure N(mu, Sigma):
///   Z = sqrt(1 - beta^2) (x - mu) + beta W + mu,   W ~ N(0, Sigma).
/// Reversible w.r.t. N(mu, Sigma) for any beta in (0, 1]; beta == 1 is an
/// exact independent draw from the initial measure.
class CrankNicolsonKernel {
 public:
  CrankNicolsonKernel(Vector mu, Matrix sigma, double beta)
      : mu_(std::move(mu)), sigma_(std::move(sigma)), beta_(beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("CrankNicolsonKernel: beta must be in (0, 1]");
    chol_ = detail::chol_lower_spd(sigma_);
  }

  Vector sample(const Vector& x, RngStream& rng) const {
    return apply_noise(x, chol_ * rng.normal_vector(dim()));
  }

  /// Deterministic part of the update given the noise W ~ N(0, Sigma).
  /// Exposed so tests can pin W.
  Vector apply_noise(const Vector& x, const Vector& w) const {
    const double carry = std::sqrt(1.0 - beta_ * beta_);
    return (carry * (x - mu_).array() + beta_ * w.array() + mu_.array()).matrix();
  }

  bool is_exact_m1_draw() const { return beta_ == 1.0; }
  double beta() const { return beta_; }
  int dim() const { return static_cast<int>(mu_.size()); }
  const Vector& mu() const { return mu_; }
  const Matrix& sigma() const { return sigma_; }
  const Matrix& chol_lower() const { return chol_; }

 private:
  Vector mu_;
  Matrix sigma_;
  double beta_;
  Matrix chol_;
};

inline Vector cn_sample(const CrankNicolsonKernel& kernel, const Vector& x, RngStream& rng) {
  return kernel.sample(x, rng);
}

/// Random-walk Metropolis kernel for a uniform (possibly improper) initial
/// measure on a domain: propose a Gaussian step in the domain's free
/// coordinates and accept iff the result stays inside. With an unconstrained
/// domain the walk is symmetric and never rejects.
class RandomWalkKernel {
 public:
  RandomWalkKernel(Matrix cov, Domain domain)
      : cov_(std::move(cov)), domain_(std::move(domain)) {
    if (cov_.rows() != domain_.free_dim() || cov_.cols() != domain_.free_dim()) {
      throw ConfigError("RandomWalkKernel: covariance does not match the domain's free dimension");
    }
    chol_ = detail::chol_lower_spd(cov_);
  }

  /// Proposal built from a standard normal draw z in free coordinates.
  Vector propose(const Vector& x, const Vector& z) const {
    return domain_.from_free(domain_.to_free(x) + chol_ * z);
  }

  /// Accept/reject for a given proposal; returns (new state, accepted).
  std::pair<Vector, bool> accept_step(const Vector& x, const Vector& proposal) const {
    if (!domain_.contains(x)) {
      throw StartOutsideDomainError("RandomWalkKernel: chain state outside the domain");
    }
    if (domain_.contains(proposal)) return {proposal, true};
    return {x, false};
  }

  std::pair<Vector, bool> sample_mh(const Vector& x, RngStream& rng) const {
    return accept_step(x, propose(x, rng.normal_vector(domain_.free_dim())));
  }

  Vector sample(const Vector& x, RngStream& rng) const { return sample_mh(x, rng).first; }

  bool is_exact_m1_draw() const { return false; }
  const Matrix& cov() const { return cov_; }
  const Matrix& chol_lower() const { return chol_; }
  const Domain& domain() const { return domain_; }

 private:
  Matrix cov_;
  Domain domain_;
  Matrix chol_;
};

inline std::pair<Vector, bool> rw_mh_sample(const RandomWalkKernel& kernel, const Vector& x,
                                            RngStream& rng) {
  return kernel.sample_mh(x, rng);
}

/// The kernel that ignores its argument and draws fresh from a proper
/// Gaussian initial measure; plugging it into the auxiliary-initialisation
/// step recovers the standard conditional particle filter.
inline CrankNicolsonKernel exact_m1_kernel(const InitialMeasure& m1) {
  if (!m1.is_gaussian()) {
    throw ImproperM1Error("exact_m1_kernel: initial measure admits no exact draw");
  }
  return CrankNicolsonKernel(m1.mean(), m1.cov(), 1.0);
}

}  // namespace dicpf
