#pragma once

#include <concepts>

#include "dicpf/common.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/rng.hpp"
#include "dicpf/trajectory.hpp"

namespace dicpf {

/// A Feynman-Kac model: initial measure M1, Markov proposal transitions
/// M_2..M_T and potentials G_1..G_T restricted to two consecutive states.
/// Conventions:
///   - sample_transition(k, x_{k-1}, rng) draws x_k ~ M_k(x_{k-1}, .), k >= 2;
///   - log_transition_density(k, x_{k-1}, x_k) is valid when
///     has_transition_density() is true;
///   - log_potential(k, x_{k-1}, x_k) is log G_k; the first argument is
///     ignored at k == 1 (G_1 depends on x_1 only);
///   - potentials return -inf exactly where G_k vanishes, never NaN.
///
/// An initial measure that is merely evaluable pointwise can always be folded
/// into the first potential (target M1' == 1, G_1' = M1 * G_1); the library
/// leaves that transformation to the model author.
template <typename M>
concept FeynmanKac = requires(const M& m, int k, const Vector& a, const Vector& b, RngStream& rng) {
  { m.num_steps() } -> std::convertible_to<int>;
  { m.state_dim() } -> std::convertible_to<int>;
  { m.initial() } -> std::convertible_to<const InitialMeasure&>;
  { m.sample_transition(k, a, rng) } -> std::convertible_to<Vector>;
  { m.log_transition_density(k, a, b) } -> std::convertible_to<double>;
  { m.has_transition_density() } -> std::convertible_to<bool>;
  { m.log_potential(k, a, b) } -> std::convertible_to<double>;
};

/// Simulates x_{1:T} forward from the model dynamics, starting at the given
/// first state. Used for chain initialisation and posterior predictive runs.
template <FeynmanKac M>
Trajectory simulate_prior_trajectory(const M& model, const Vector& x1, RngStream& rng) {
  const int T = model.num_steps();
  Matrix values(model.state_dim(), T);
  values.col(0) = x1;
  for (int k = 2; k <= T; ++k) {
    values.col(k - 1) = model.sample_transition(k, values.col(k - 2), rng);
  }
  return Trajectory(std::move(values));
}

/// log G_1(x_1) + sum_{k>=2} [log M_k + log G_k] along a trajectory; the
/// initial measure is excluded (it does not depend on hyperparameters).
template <FeynmanKac M>
double log_joint_excluding_m1(const M& model, const Trajectory& traj) {
  double total = model.log_potential(1, traj.state(1), traj.state(1));
  for (int k = 2; k <= model.num_steps(); ++k) {
    if (total == kNegInf) return kNegInf;
    total += model.log_transition_density(k, traj.state(k - 1), traj.state(k));
    total += model.log_potential(k, traj.state(k - 1), traj.state(k));
  }
  return total;
}

}  // namespace dicpf
