#pragma once

#include <utility>
#include <vector>

#include "dicpf/common.hpp"
#include "dicpf/init_kernels.hpp"
#include "dicpf/model.hpp"
#include "dicpf/particle_system.hpp"
#include "dicpf/weights.hpp"

namespace dicpf {

/// Forward conditional particle filter. The caller supplies the reference
/// tail x_{2:T} and the time-1 particles (column 0 must hold the reference's
/// first state). Slot 0 is pinned to the reference throughout: its ancestor
/// is always 0 and its states are never resampled. Multinomial resampling,
/// every step.
template <FeynmanKac M>
ParticleSystem forward_cpf(const M& model, const Eigen::Ref<const Matrix>& ref_tail,
                           const Matrix& first_particles, RngStream& rng) {
  const int T = model.num_steps();
  const int d = model.state_dim();
  const int N = static_cast<int>(first_particles.cols());
  if (N < 1) throw ConfigError("forward_cpf: need at least one particle");
  if (static_cast<int>(ref_tail.cols()) != T - 1 || first_particles.rows() != d) {
    throw ConfigError("forward_cpf: reference/particle shapes do not match the model");
  }

  ParticleSystem ps;
  ps.num_steps = T;
  ps.num_particles = N;
  ps.state_dim = d;
  ps.particles.resize(T);
  ps.weights.resize(T);
  ps.log_weights.resize(T);
  ps.ancestors.resize(T - 1);
  ps.particles[0] = first_particles;

  // Predecessor of each particle along its own lineage, for the two-argument
  // potentials. Unused at k == 1.
  Matrix prev = first_particles;
  Vector lw(N);

  for (int k = 1; k <= T; ++k) {
    const Matrix& cur = ps.particles[k - 1];
    for (int i = 0; i < N; ++i) {
      lw(i) = model.log_potential(k, prev.col(i), cur.col(i));
    }
    NormalizedWeights nw = normalize_weights(lw);
    ps.log_weights[k - 1] = lw.array() - nw.log_sum;
    ps.weights[k - 1] = std::move(nw.probs);
    if (k == T) break;

    IndexVector a(N);
    a(0) = 0;
    categorical_sample_many(rng, ps.weights[k - 1], a.segment(1, N - 1));

    Matrix next(d, N);
    Matrix next_prev(d, N);
    next.col(0) = ref_tail.col(k - 1);
    next_prev.col(0) = cur.col(0);
    for (int i = 1; i < N; ++i) {
      next_prev.col(i) = cur.col(a(i));
      next.col(i) = model.sample_transition(k + 1, next_prev.col(i), rng);
    }
    ps.ancestors[k - 1] = std::move(a);
    ps.particles[k] = std::move(next);
    prev = std::move(next_prev);
  }
  return ps;
}

/// Path selection by ancestor tracing: draw the final index from the final
/// weights and follow the stored genealogy backwards.
inline std::pair<IndexVector, AdaptData> pick_path_at(const ParticleSystem& ps, RngStream& rng) {
  const int T = ps.num_steps;
  IndexVector b(T);
  b(T - 1) = categorical_sample(rng, ps.weights[T - 1]);
  for (int k = T - 1; k >= 1; --k) {
    b(k - 1) = ps.ancestors[k - 1](b(k));
  }
  AdaptData data;
  data.b1 = b(0);
  data.first_weights = ps.weights[0];
  data.first_particles = ps.particles[0];
  data.selector = PathSelector::AncestorTracing;
  return {std::move(b), std::move(data)};
}

/// Path selection by backward sampling: at each step re-weight every particle
/// by the transition density and potential bridging it to the state already
/// selected one step ahead. Requires an evaluable transition density.
/// Backward weights are formed in log space.
template <FeynmanKac M>
std::pair<IndexVector, AdaptData> pick_path_bs(const M& model, const ParticleSystem& ps,
                                               RngStream& rng) {
  if (!model.has_transition_density()) {
    throw ConfigError("pick_path_bs: model does not expose a transition density");
  }
  const int T = ps.num_steps;
  const int N = ps.num_particles;
  IndexVector b(T);
  b(T - 1) = categorical_sample(rng, ps.weights[T - 1]);

  Vector v1 = ps.weights[0];  // T == 1: the backward weights are the filter weights
  Vector lv(N);
  for (int k = T - 1; k >= 1; --k) {
    const Vector next = ps.particles[k].col(b(k));
    for (int i = 0; i < N; ++i) {
      const auto xi = ps.particles[k - 1].col(i);
      lv(i) = ps.log_weights[k - 1](i) + model.log_transition_density(k + 1, xi, next) +
              model.log_potential(k + 1, xi, next);
    }
    NormalizedWeights nw = normalize_weights(lv);
    b(k - 1) = categorical_sample(rng, nw.probs);
    if (k == 1) v1 = std::move(nw.probs);
  }

  AdaptData data;
  data.b1 = b(0);
  data.first_weights = std::move(v1);
  data.first_particles = ps.particles[0];
  data.selector = PathSelector::BackwardSampling;
  return {std::move(b), std::move(data)};
}

/// One auxiliary-initialisation CPF transition. Draws the pseudo-state
/// x_0 ~ Q(ref_1, .), repopulates the time-1 particles from Q(x_0, .) with
/// slot 0 pinned to the reference, runs the forward pass and selects a path.
/// Leaves the smoothing distribution invariant for any Q reversible w.r.t.
/// the model's initial measure.
template <FeynmanKac M, InitKernel K>
std::pair<Trajectory, AdaptData> ai_cpf_step(const M& model, const K& kernel,
                                             const Trajectory& ref, PathSelector selector,
                                             int n_particles, RngStream& rng) {
  const int T = model.num_steps();
  const int d = model.state_dim();
  if (ref.length() != T || ref.dim() != d) {
    throw ConfigError("ai_cpf_step: reference trajectory does not match the model");
  }
  if (n_particles < 1) throw ConfigError("ai_cpf_step: need at least one particle");

  const Vector x0 = kernel.sample(ref.state(1), rng);
  Matrix first(d, n_particles);
  first.col(0) = ref.state(1);
  for (int i = 1; i < n_particles; ++i) {
    first.col(i) = kernel.sample(x0, rng);
  }

  ParticleSystem ps = forward_cpf(model, ref.tail(), first, rng);
  auto [b, data] = selector == PathSelector::AncestorTracing
                       ? pick_path_at(ps, rng)
                       : pick_path_bs(model, ps, rng);

  Matrix out(d, T);
  for (int k = 1; k <= T; ++k) {
    out.col(k - 1) = ps.particles[k - 1].col(b(k - 1));
  }
  return {Trajectory(std::move(out)), std::move(data)};
}

/// The classic conditional particle filter with backward sampling: exact
/// initial-measure draws for the first-step particles. Requires a proper
/// Gaussian initial measure.
template <FeynmanKac M>
std::pair<Trajectory, AdaptData> cpf_bs_step(const M& model, const Trajectory& ref,
                                             int n_particles, RngStream& rng) {
  const CrankNicolsonKernel kernel = exact_m1_kernel(model.initial());
  return ai_cpf_step(model, kernel, ref, PathSelector::BackwardSampling, n_particles, rng);
}

}  // namespace dicpf
