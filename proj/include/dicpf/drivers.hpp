#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dicpf/adapt.hpp"
#include "dicpf/common.hpp"
#include "dicpf/cpf.hpp"
#include "dicpf/model.hpp"
#include "dicpf/models/seir.hpp"
#include "dicpf/rng.hpp"
#include "dicpf/trajectory.hpp"

namespace dicpf {

/// One retained iteration of an iterated sampler.
struct ChainRecord {
  long iteration = 0;
  Trajectory trajectory;        // empty when trajectory storage is off
  Vector theta;                 // empty for pure smoothing runs
  double alpha = kNaN;          // realized first-state replacement rate
  bool theta_accepted = false;
  double scale = kNaN;          // adapter scale telemetry (beta, e^delta or c)
  double sigma_trace = kNaN;    // trace of the adapted covariance
};

struct ChainOptions {
  long n_iters = 0;
  long burn_in = 0;
  long thin = 1;
  bool store_trajectories = true;

  void validate() const {
    if (n_iters < 0) throw ConfigError("ChainOptions: n_iters must be nonnegative");
    if (burn_in < 0 || burn_in > n_iters) throw ConfigError("ChainOptions: burn_in out of range");
    if (thin < 1) throw ConfigError("ChainOptions: thin must be >= 1");
  }
  bool keep(long j) const { return j > burn_in && (j - burn_in) % thin == 0; }
};

/// Records plus full-resolution telemetry. Records honour burn-in/thinning:
/// exactly floor((n_iters - burn_in) / thin) of them. The traces cover every
/// iteration.
struct ChainOutput {
  std::vector<ChainRecord> records;
  std::vector<double> alpha_trace;
  std::vector<std::uint8_t> theta_accept_trace;
};

namespace detail {

template <typename Adapter>
void check_selector(PathSelector selector) {
  if (Adapter::needs_backward_weights && selector == PathSelector::AncestorTracing) {
    throw ConfigError(
        "this adaptation needs backward-sampling weights; ancestor tracing cannot provide them");
  }
}

inline ChainRecord make_record(long j, const Trajectory& traj, const AdaptData& data,
                               double scale, double sigma_trace, bool store) {
  ChainRecord rec;
  rec.iteration = j;
  if (store) rec.trajectory = traj;
  rec.alpha = data.alpha();
  rec.scale = scale;
  rec.sigma_trace = sigma_trace;
  return rec;
}

}  // namespace detail

/// Iterated auxiliary-initialisation CPF with on-line kernel adaptation.
/// With a frozen adapter (step size identically zero, or a fixed kernel)
/// the chain is time-homogeneous and leaves the smoothing target invariant.
template <FeynmanKac M, typename Adapter>
ChainOutput aai_cpf_run(const M& model, Adapter& adapter, Trajectory ref, PathSelector selector,
                        int n_particles, const ChainOptions& opt, RngStream& rng) {
  opt.validate();
  detail::check_selector<Adapter>(selector);
  ChainOutput out;
  out.alpha_trace.reserve(opt.n_iters);
  for (long j = 1; j <= opt.n_iters; ++j) {
    const auto kernel = adapter.kernel();
    auto [traj, data] = ai_cpf_step(model, kernel, ref, selector, n_particles, rng);
    ref = std::move(traj);
    adapter.update(data, j);
    out.alpha_trace.push_back(data.alpha());
    if (opt.keep(j)) {
      out.records.push_back(detail::make_record(j, ref, data, adapter.scale(),
                                                adapter.sigma_trace(), opt.store_trajectories));
    }
  }
  return out;
}

/// A hyperparameter block: a prior over the (transformed) parameter vector
/// and a deterministic factory building the corresponding Feynman-Kac model.
template <typename H>
concept HyperModel = requires(const H& h, const Vector& theta) {
  { h.log_prior(theta) } -> std::convertible_to<double>;
  { h.make_model(theta) };
  { h.dim() } -> std::convertible_to<int>;
};

/// Adaptive particle Gibbs: alternates a robust-adaptive-Metropolis update
/// of theta targeting p(theta | x) with an auxiliary-initialisation CPF
/// update of the trajectory under the fresh parameters. theta lives in
/// transformed coordinates; the prior is specified directly on them.
template <HyperModel H, typename Adapter>
ChainOutput aai_pg_run(const H& hyper, Vector theta, Trajectory ref, Adapter& adapter,
                       RamState theta_ram, PathSelector selector, int n_particles,
                       const ChainOptions& opt, RngStream& rng) {
  opt.validate();
  detail::check_selector<Adapter>(selector);

  auto log_target = [&hyper](const Vector& th, const Trajectory& x) {
    const double prior = hyper.log_prior(th);
    if (prior == kNegInf) return kNegInf;
    const double value = prior + log_joint_excluding_m1(hyper.make_model(th), x);
    if (std::isnan(value)) throw NonFiniteTargetError("aai_pg_run: log target evaluated to NaN");
    return value;
  };

  ChainOutput out;
  out.alpha_trace.reserve(opt.n_iters);
  out.theta_accept_trace.reserve(opt.n_iters);
  if (log_target(theta, ref) == kNegInf) {
    throw ConfigError("aai_pg_run: initial (theta, trajectory) has zero posterior density");
  }

  for (long j = 1; j <= opt.n_iters; ++j) {
    // theta block, conditional on the current trajectory
    const double current_lt = log_target(theta, ref);
    const Vector u = rng.normal_vector(hyper.dim());
    const Vector proposal = theta + theta_ram.s_lower * u;
    const double proposal_lt = log_target(proposal, ref);
    const double alpha_theta = std::exp(std::min(0.0, proposal_lt - current_lt));
    const bool accepted = rng.uniform() < alpha_theta;
    if (accepted) theta = proposal;
    theta_ram = ram_update(theta_ram, u, alpha_theta, j);
    out.theta_accept_trace.push_back(accepted ? 1 : 0);

    // trajectory block under the fresh theta
    const auto model = hyper.make_model(theta);
    const auto kernel = adapter.kernel();
    auto [traj, data] = ai_cpf_step(model, kernel, ref, selector, n_particles, rng);
    ref = std::move(traj);
    adapter.update(data, j);
    out.alpha_trace.push_back(data.alpha());

    if (opt.keep(j)) {
      ChainRecord rec = detail::make_record(j, ref, data, adapter.scale(), adapter.sigma_trace(),
                                            opt.store_trajectories);
      rec.theta = theta;
      rec.theta_accepted = accepted;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

/// A Feynman-Kac model for x_{2:T} with x_1 held fixed: transitions and
/// potentials shift one step, and the first potential closes over the
/// conditioned state.
template <FeynmanKac M>
class ConditionalTailModel {
 public:
  ConditionalTailModel(const M& base, Vector x1) : base_(&base), x1_(std::move(x1)) {}

  int num_steps() const { return base_->num_steps() - 1; }
  int state_dim() const { return base_->state_dim(); }
  const InitialMeasure& initial() const { return base_->initial(); }  // never sampled

  Vector sample_transition(int k, const Vector& prev, RngStream& rng) const {
    return base_->sample_transition(k + 1, prev, rng);
  }
  double log_transition_density(int k, const Vector& prev, const Vector& cur) const {
    return base_->log_transition_density(k + 1, prev, cur);
  }
  bool has_transition_density() const { return base_->has_transition_density(); }

  double log_potential(int k, const Vector& prev, const Vector& cur) const {
    return k == 1 ? base_->log_potential(2, x1_, cur) : base_->log_potential(k + 1, prev, cur);
  }

  void set_conditioned_state(Vector x1) { x1_ = std::move(x1); }

 private:
  const M* base_;
  Vector x1_;
};

/// Baseline sampler that treats the first state as a parameter: alternates
/// a CPF-BS update of x_{2:T} given x_1 with a robust-adaptive-Metropolis
/// update of x_1 targeting
///   p(x_1 | x_{2:T}) ~ M1(x_1) G_1(x_1) M_2(x_1, x_2) G_2(x_1, x_2).
template <FeynmanKac M>
ChainOutput dpg_bs_run(const M& model, Vector x1, Trajectory tail_ref, int n_particles,
                       const ChainOptions& opt, RngStream& rng,
                       RamState ram = RamState::init(0)) {
  opt.validate();
  const int T = model.num_steps();
  const int d = model.state_dim();
  if (T < 2) throw ConfigError("dpg_bs_run: need at least two time steps");
  if (tail_ref.length() != T - 1 || tail_ref.dim() != d) {
    throw ConfigError("dpg_bs_run: tail reference does not match the model");
  }
  if (!model.has_transition_density()) {
    throw ConfigError("dpg_bs_run: the first-state update needs a transition density");
  }
  if (ram.s_lower.rows() == 0) ram = RamState::init(d);

  auto log_target = [&model](const Vector& x1v, const Vector& x2) {
    double lt = model.initial().log_density(x1v);
    if (lt == kNegInf) return kNegInf;
    lt += model.log_potential(1, x1v, x1v);
    if (lt == kNegInf) return kNegInf;
    lt += model.log_transition_density(2, x1v, x2);
    lt += model.log_potential(2, x1v, x2);
    return lt;
  };

  ConditionalTailModel<M> tail_model(model, x1);
  ChainOutput out;
  out.alpha_trace.reserve(opt.n_iters);
  out.theta_accept_trace.reserve(opt.n_iters);

  for (long j = 1; j <= opt.n_iters; ++j) {
    // CPF-BS block for x_{2:T} given x_1
    tail_model.set_conditioned_state(x1);
    Matrix first(d, n_particles);
    first.col(0) = tail_ref.state(1);
    for (int i = 1; i < n_particles; ++i) {
      first.col(i) = model.sample_transition(2, x1, rng);
    }
    ParticleSystem ps = forward_cpf(tail_model, tail_ref.tail(), first, rng);
    auto [b, data] = pick_path_bs(tail_model, ps, rng);
    Matrix new_tail(d, T - 1);
    for (int k = 0; k < T - 1; ++k) new_tail.col(k) = ps.particles[k].col(b(k));
    tail_ref = Trajectory(std::move(new_tail));

    // RAM Metropolis block for x_1 given the fresh x_2
    const Vector u = rng.normal_vector(d);
    const Vector proposal = x1 + ram.s_lower * u;
    const double current_lt = log_target(x1, tail_ref.state(1));
    const double proposal_lt = log_target(proposal, tail_ref.state(1));
    const double alpha = current_lt == kNegInf
                             ? 1.0
                             : std::exp(std::min(0.0, proposal_lt - current_lt));
    const bool accepted = rng.uniform() < alpha && proposal_lt > kNegInf;
    if (accepted) x1 = proposal;
    ram = ram_update(ram, u, alpha, j);
    out.theta_accept_trace.push_back(accepted ? 1 : 0);
    out.alpha_trace.push_back(data.alpha());

    if (opt.keep(j)) {
      ChainRecord rec;
      rec.iteration = j;
      rec.alpha = data.alpha();
      rec.theta_accepted = accepted;
      rec.scale = ram.s_lower(0, 0);
      if (opt.store_trajectories) {
        Matrix full(d, T);
        full.col(0) = x1;
        full.rightCols(T - 1) = tail_ref.values();
        rec.trajectory = Trajectory(std::move(full));
      }
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

struct SeirBlockProposal {
  Vector state;  // full (S, E, I, R, rho) candidate
  bool valid = false;
};

/// Random-walk proposal for the SEIR initial block: Gaussian step through
/// the shape factor in (rho, E, I), integer rounding of E and I, then
/// R = 0 and S = popsize - E - I. Invalid candidates (negative counts)
/// are rejected by the caller.
inline SeirBlockProposal seir_initial_block_proposal(const Vector& current, const Matrix& s_lower,
                                                     RngStream& rng, double popsize) {
  Vector free(seir::kFreeDim);
  free << current(seir::kRho), current(seir::kE), current(seir::kI);
  free += s_lower * rng.normal_vector(seir::kFreeDim);
  const double e = std::round(free(1));
  const double i = std::round(free(2));
  SeirBlockProposal out;
  out.state.resize(seir::kDim);
  out.state << popsize - e - i, e, i, 0.0, free(0);
  out.valid = e >= 0.0 && i >= 0.0 && out.state(seir::kS) >= 0.0;
  return out;
}

/// Simulates a reference trajectory from the model dynamics started at x1,
/// retrying until it has positive posterior density.
template <FeynmanKac M>
Trajectory make_initial_trajectory(const M& model, const Vector& x1, RngStream& rng,
                                   int max_retries = 100) {
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Trajectory traj = simulate_prior_trajectory(model, x1, rng);
    if (log_joint_excluding_m1(model, traj) > kNegInf) return traj;
  }
  throw Error("make_initial_trajectory: no positive-density path found; check the starting state");
}

}  // namespace dicpf
