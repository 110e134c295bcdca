#pragma once

#include <utility>

#include "dicpf/common.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/model.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

/// Parameters of the noisy AR(1) model
///   x_{k+1} = rho x_k + N(0, sigma_x^2),   y_k = x_k + N(0, sigma_y^2),
/// with x_1 ~ N(0, sigma1^2) or, with flat_prior set, an improper uniform
/// initial measure on R. rho == 1 is the noisy random-walk model.
struct NoisyArParams {
  double rho = 1.0;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double sigma1 = 1.0;
  bool flat_prior = false;
};

/// Bootstrap Feynman-Kac form of the noisy AR(1): transitions follow the
/// state dynamics and the potentials are the observation densities.
class NoisyArModel {
 public:
  NoisyArModel(NoisyArParams params, Vector data)
      : params_(params), data_(std::move(data)) {
    if (params_.sigma_x <= 0.0) throw ConfigError("NoisyArModel: sigma_x must be positive");
    if (params_.sigma_y <= 0.0) throw ConfigError("NoisyArModel: sigma_y must be positive");
    if (data_.size() < 1) throw ConfigError("NoisyArModel: empty dataset");
    if (params_.flat_prior) {
      initial_ = InitialMeasure::uniform_improper(Domain::all(1));
    } else {
      if (params_.sigma1 <= 0.0) throw ConfigError("NoisyArModel: sigma1 must be positive");
      initial_ = InitialMeasure::gaussian(Vector::Zero(1),
                                          Matrix::Constant(1, 1, params_.sigma1 * params_.sigma1));
    }
  }

  int num_steps() const { return static_cast<int>(data_.size()); }
  int state_dim() const { return 1; }
  const InitialMeasure& initial() const { return initial_; }
  const NoisyArParams& params() const { return params_; }
  const Vector& data() const { return data_; }

  Vector sample_transition(int, const Vector& prev, RngStream& rng) const {
    return Vector::Constant(1, params_.rho * prev(0) + params_.sigma_x * rng.normal());
  }

  double log_transition_density(int, const Vector& prev, const Vector& cur) const {
    return gaussian_logpdf(cur(0), params_.rho * prev(0), params_.sigma_x);
  }

  bool has_transition_density() const { return true; }

  double log_potential(int k, const Vector&, const Vector& cur) const {
    return gaussian_logpdf(data_(k - 1), cur(0), params_.sigma_y);
  }

 private:
  NoisyArParams params_;
  Vector data_;
  InitialMeasure initial_;
};

inline NoisyArModel make_noisy_ar(const NoisyArParams& params, Vector data) {
  return NoisyArModel(params, std::move(data));
}

/// Simulates a dataset of length T started from the fixed first state x1.
/// Returns (latent states, observations).
inline std::pair<Vector, Vector> simulate_noisy_ar(const NoisyArParams& params, int T, double x1,
                                                   RngStream& rng) {
  if (params.sigma_x <= 0.0 || params.sigma_y <= 0.0) {
    throw ConfigError("simulate_noisy_ar: noise scales must be positive");
  }
  Vector x(T), y(T);
  x(0) = x1;
  for (int k = 1; k < T; ++k) x(k) = params.rho * x(k - 1) + params.sigma_x * rng.normal();
  for (int k = 0; k < T; ++k) y(k) = x(k) + params.sigma_y * rng.normal();
  return {std::move(x), std::move(y)};
}

}  // namespace dicpf
