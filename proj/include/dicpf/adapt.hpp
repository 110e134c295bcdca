#pragma once

#include <cmath>
#include <utility>

#include "dicpf/common.hpp"
#include "dicpf/domain.hpp"
#include "dicpf/init_kernels.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/particle_system.hpp"

namespace dicpf {

// Hard numeric guards on the log-scale parameters, always on. They prevent
// overflow of exp(delta) without constraining any realistic run.
inline constexpr double kDeltaClamp = 30.0;
inline constexpr double kZetaClamp = 15.0;

/// Decaying step sizes shared by the stochastic-approximation updates:
/// eta_j = min(eta_max, j^-gamma).
struct StepSchedule {
  double gamma = 0.66;
  double eta_max = 0.5;

  double operator()(long j) const { return std::min(eta_max, std::pow(static_cast<double>(j), -gamma)); }
};

inline double step_size(long j, double gamma = 0.66, double eta_max = 0.5) {
  if (j < 1) throw ConfigError("step_size: iteration index must be >= 1");
  return StepSchedule{gamma, eta_max}(j);
}

/// Covariance adaptation state: running mean and covariance of the selected
/// first state, scaled by a fixed factor c when used as a proposal.
struct AmState {
  Vector mu;
  Matrix sigma;
  double c = 2.38 * 2.38;

  static AmState init(const Vector& mu0, double c) {
    return {mu0, Matrix::Identity(mu0.size(), mu0.size()), c};
  }
};

/// Covariance plus log-scale adaptation state; proposal covariance is
/// exp(delta) * sigma, with delta driven towards a target acceptance rate.
struct AswamState {
  Vector mu;
  Matrix sigma;
  double delta = 0.0;
  double alpha_target = 0.8;

  static AswamState init(const Vector& mu0, double alpha_target) {
    return {mu0, Matrix::Identity(mu0.size(), mu0.size()), 0.0, alpha_target};
  }
};

/// Scalar adaptive-scaling state for the autoregressive kernel's
/// beta = logit^-1(zeta).
struct DgiScaleState {
  double zeta = 0.0;  // logit(0.5)
  double alpha_target = 0.8;

  double beta() const { return inv_logit(zeta); }
};

/// Robust adaptive Metropolis state: lower-triangular shape factor S with
/// a rank-one acceptance-rate-driven update.
struct RamState {
  Matrix s_lower;
  double alpha_target = 0.441;
  double eta_max = 0.5;
  double gamma = 0.66;

  static RamState init(int dim, double alpha_target = 0.441) {
    return {Matrix::Identity(dim, dim), alpha_target, 0.5, 0.66};
  }
};

/// Mean/covariance recursion on the selected first state. The covariance
/// update uses the pre-update mean.
inline AmState am_update(const AmState& state, const Vector& x1_selected, long j,
                         const StepSchedule& sched = {}) {
  const double eta = sched(j);
  if (eta == 0.0) return state;
  AmState out = state;
  const Vector centered = x1_selected - state.mu;
  out.mu = (1.0 - eta) * state.mu + eta * x1_selected;
  out.sigma = (1.0 - eta) * state.sigma + eta * (centered * centered.transpose());
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

/// Rao-Blackwellised covariance recursion over all time-1 particles with
/// their backward-sampling weights, plus the acceptance-rate-driven log
/// scale: delta <- delta + eta_j (alpha - alpha_target), alpha = 1 - V_1^(1).
inline AswamState aswam_update(const AswamState& state, const AdaptData& data, long j,
                               const StepSchedule& sched = {}) {
  if (data.selector != PathSelector::BackwardSampling) {
    throw SelectorMismatchError(
        "aswam_update: ancestor tracing supplies no backward weights; use am_update");
  }
  const double eta = sched(j);
  if (eta == 0.0) return state;
  AswamState out = state;
  const Vector& w = data.first_weights;
  const Matrix centered = data.first_particles.colwise() - state.mu;
  out.mu = (1.0 - eta) * state.mu + eta * (data.first_particles * w);
  out.sigma = (1.0 - eta) * state.sigma +
              eta * (centered * w.asDiagonal() * centered.transpose());
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  out.delta = clamp(state.delta + eta * (data.alpha() - state.alpha_target), -kDeltaClamp, kDeltaClamp);
  return out;
}

/// Acceptance-rate-driven update of the autoregression scale.
inline DgiScaleState dgi_scale_update(const DgiScaleState& state, const AdaptData& data, long j,
                                      const StepSchedule& sched = {}) {
  if (data.selector != PathSelector::BackwardSampling) {
    throw SelectorMismatchError(
        "dgi_scale_update: ancestor tracing supplies no backward weights");
  }
  const double eta = sched(j);
  if (eta == 0.0) return state;
  DgiScaleState out = state;
  out.zeta = clamp(state.zeta + eta * (data.alpha() - state.alpha_target), -kZetaClamp, kZetaClamp);
  return out;
}

/// Rank-one shape update: S_n is the lower Cholesky factor of
///   S_{n-1} (I + eta_n (alpha - alpha_target) U U' / |U|^2) S_{n-1}',
/// with eta_n = min(eta_max, d n^-gamma). The bracketed matrix is positive
/// definite because eta_n |alpha - alpha_target| < 1.
inline RamState ram_update(const RamState& state, const Vector& u, double alpha_realized, long n) {
  const int d = static_cast<int>(u.size());
  if (u.squaredNorm() == 0.0) throw ConfigError("ram_update: direction vector is zero");
  const double eta = std::min(state.eta_max, d * std::pow(static_cast<double>(n), -state.gamma));
  const double drive = eta * (alpha_realized - state.alpha_target);
  if (drive == 0.0) return state;
  RamState out = state;
  const Matrix bracket =
      Matrix::Identity(d, d) + drive * (u * u.transpose()) / u.squaredNorm();
  const Matrix full = state.s_lower * bracket * state.s_lower.transpose();
  out.s_lower = detail::chol_lower_spd(0.5 * (full + full.transpose()));
  return out;
}

/// Eigenvalue floor for an adapted covariance and clamp for the log scale;
/// inputs already satisfying the bounds are returned unchanged bitwise.
/// Off by default in the samplers (adaptation is empirically stable without
/// it); available as an explicit stabilisation step.
inline std::pair<Matrix, double> project_stability(const Matrix& sigma, double delta, double eps,
                                                   double eps_delta = 0.0) {
  if (eps_delta <= 0.0) eps_delta = eps;
  const double delta_bound = -std::log(eps_delta);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma);
  if (eig.info() != Eigen::Success) throw Error("project_stability: eigendecomposition failed");
  const double clamped_delta = clamp(delta, -delta_bound, delta_bound);
  if (eig.eigenvalues().minCoeff() >= eps) {
    return {sigma, clamped_delta};
  }
  const Vector floored = eig.eigenvalues().cwiseMax(eps);
  Matrix projected = eig.eigenvectors() * floored.asDiagonal() * eig.eigenvectors().transpose();
  projected = 0.5 * (projected + projected.transpose()).eval();
  return {std::move(projected), clamped_delta};
}

/// Stabilisation policy for the adapted states.
enum class Stabilisation { Off, Project, Reject };

struct StabilisationOptions {
  Stabilisation mode = Stabilisation::Off;
  double eps = 1e-6;
};

// ---------------------------------------------------------------------------
// Kernel adapters: each one owns an adaptation state and materialises the
// corresponding initialisation kernel. Drivers only see kernel()/update().
// A schedule with eta_max == 0 freezes the adaptation.
// ---------------------------------------------------------------------------

/// Fixed kernel, no adaptation.
template <InitKernel K>
class FixedKernelAdapter {
 public:
  static constexpr bool needs_backward_weights = false;

  explicit FixedKernelAdapter(K kernel) : kernel_(std::move(kernel)) {}
  const K& kernel() const { return kernel_; }
  void update(const AdaptData&, long) {}
  double scale() const { return kNaN; }
  double sigma_trace() const { return kNaN; }

 private:
  K kernel_;
};

/// Adaptive autoregression scale for a Gaussian initial measure.
class DgiScaleAdapter {
 public:
  static constexpr bool needs_backward_weights = true;

  DgiScaleAdapter(const InitialMeasure& m1, double alpha_target, StepSchedule sched = {},
                  double beta0 = 0.5)
      : mu_(m1.mean()), sigma_(m1.cov()), sched_(sched) {
    if (!m1.is_gaussian()) throw ConfigError("DgiScaleAdapter: needs a Gaussian initial measure");
    state_.zeta = logit(beta0);
    state_.alpha_target = alpha_target;
  }

  CrankNicolsonKernel kernel() const { return CrankNicolsonKernel(mu_, sigma_, state_.beta()); }
  void update(const AdaptData& data, long j) { state_ = dgi_scale_update(state_, data, j, sched_); }

  const DgiScaleState& state() const { return state_; }
  double scale() const { return state_.beta(); }
  double sigma_trace() const { return sigma_.trace(); }

 private:
  Vector mu_;
  Matrix sigma_;
  StepSchedule sched_;
  DgiScaleState state_;
};

/// Covariance adaptation for the random-walk kernel, proposal cov = c * Sigma.
/// Works with either path selector. For constrained domains the statistics
/// are accumulated in the free proposal coordinates.
class FdiAmAdapter {
 public:
  static constexpr bool needs_backward_weights = false;

  FdiAmAdapter(const Vector& mu0_free, Domain domain, double c, StepSchedule sched = {},
               StabilisationOptions stab = {})
      : domain_(std::move(domain)), sched_(sched), stab_(stab), state_(AmState::init(mu0_free, c)) {}

  RandomWalkKernel kernel() const { return RandomWalkKernel(state_.c * state_.sigma, domain_); }

  void update(const AdaptData& data, long j) {
    const Vector x = domain_.to_free(data.first_particles.col(data.b1));
    AmState next = am_update(state_, x, j, sched_);
    state_ = stabilise(std::move(next));
  }

  const AmState& state() const { return state_; }
  double scale() const { return state_.c; }
  double sigma_trace() const { return state_.sigma.trace(); }

 private:
  AmState stabilise(AmState next) const {
    if (stab_.mode == Stabilisation::Project) {
      next.sigma = project_stability(next.sigma, 0.0, stab_.eps).first;
    } else if (stab_.mode == Stabilisation::Reject) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(next.sigma);
      if (eig.eigenvalues().minCoeff() < stab_.eps) return state_;
    }
    return next;
  }

  Domain domain_;
  StepSchedule sched_;
  StabilisationOptions stab_;
  AmState state_;
};

/// Rao-Blackwellised covariance plus acceptance-rate scaling for the
/// random-walk kernel, proposal cov = exp(delta) * Sigma. Backward sampling
/// only.
class FdiAswamAdapter {
 public:
  static constexpr bool needs_backward_weights = true;

  FdiAswamAdapter(const Vector& mu0_free, Domain domain, double alpha_target,
                  StepSchedule sched = {}, StabilisationOptions stab = {})
      : domain_(std::move(domain)),
        sched_(sched),
        stab_(stab),
        state_(AswamState::init(mu0_free, alpha_target)) {}

  RandomWalkKernel kernel() const {
    return RandomWalkKernel(std::exp(state_.delta) * state_.sigma, domain_);
  }

  void update(const AdaptData& data, long j) {
    if (domain_.kind() == Domain::Kind::Custom) {
      AdaptData free_data = data;
      Matrix free_particles(domain_.free_dim(), data.first_particles.cols());
      for (Eigen::Index i = 0; i < data.first_particles.cols(); ++i) {
        free_particles.col(i) = domain_.to_free(data.first_particles.col(i));
      }
      free_data.first_particles = std::move(free_particles);
      state_ = stabilise(aswam_update(state_, free_data, j, sched_));
    } else {
      state_ = stabilise(aswam_update(state_, data, j, sched_));
    }
  }

  const AswamState& state() const { return state_; }
  double scale() const { return std::exp(state_.delta); }
  double sigma_trace() const { return state_.sigma.trace(); }

 private:
  AswamState stabilise(AswamState next) const {
    if (stab_.mode == Stabilisation::Project) {
      auto [sigma, delta] = project_stability(next.sigma, next.delta, stab_.eps);
      next.sigma = std::move(sigma);
      next.delta = delta;
    } else if (stab_.mode == Stabilisation::Reject) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(next.sigma);
      const double bound = -std::log(stab_.eps);
      if (eig.eigenvalues().minCoeff() < stab_.eps || std::abs(next.delta) > bound) return state_;
    }
    return next;
  }

  Domain domain_;
  StepSchedule sched_;
  StabilisationOptions stab_;
  AswamState state_;
};

}  // namespace dicpf
