#pragma once

#include <utility>

#include "dicpf/common.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/model.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

/// Stochastic volatility model
///   x_{k+1} = x_k + N(0, sigma_x^2),   y_k = exp(x_k) * N(0, sigma_y^2),
/// so y_k | x_k ~ N(0, sigma_y^2 exp(2 x_k)).
struct SvParams {
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double sigma1 = 1.0;
  bool flat_prior = false;
};

class SvModel {
 public:
  SvModel(SvParams params, Vector data) : params_(params), data_(std::move(data)) {
    if (params_.sigma_x <= 0.0) throw ConfigError("SvModel: sigma_x must be positive");
    if (params_.sigma_y <= 0.0) throw ConfigError("SvModel: sigma_y must be positive");
    if (data_.size() < 1) throw ConfigError("SvModel: empty dataset");
    if (params_.flat_prior) {
      initial_ = InitialMeasure::uniform_improper(Domain::all(1));
    } else {
      if (params_.sigma1 <= 0.0) throw ConfigError("SvModel: sigma1 must be positive");
      initial_ = InitialMeasure::gaussian(Vector::Zero(1),
                                          Matrix::Constant(1, 1, params_.sigma1 * params_.sigma1));
    }
  }

  int num_steps() const { return static_cast<int>(data_.size()); }
  int state_dim() const { return 1; }
  const InitialMeasure& initial() const { return initial_; }
  const SvParams& params() const { return params_; }

  Vector sample_transition(int, const Vector& prev, RngStream& rng) const {
    return Vector::Constant(1, prev(0) + params_.sigma_x * rng.normal());
  }

  double log_transition_density(int, const Vector& prev, const Vector& cur) const {
    return gaussian_logpdf(cur(0), prev(0), params_.sigma_x);
  }

  bool has_transition_density() const { return true; }

  double log_potential(int k, const Vector&, const Vector& cur) const {
    // N(y_k; 0, sigma_y^2 e^{2x}): finite for every finite x and y.
    const double x = cur(0);
    const double y = data_(k - 1);
    static const double kLog2Pi = std::log(2.0 * M_PI);
    const double y_over_scale = y / params_.sigma_y;
    return -0.5 * kLog2Pi - std::log(params_.sigma_y) - x -
           0.5 * y_over_scale * y_over_scale * std::exp(-2.0 * x);
  }

 private:
  SvParams params_;
  Vector data_;
  InitialMeasure initial_;
};

inline SvModel make_sv(const SvParams& params, Vector data) {
  return SvModel(params, std::move(data));
}

inline std::pair<Vector, Vector> simulate_sv(const SvParams& params, int T, double x1,
                                             RngStream& rng) {
  if (params.sigma_x <= 0.0 || params.sigma_y <= 0.0) {
    throw ConfigError("simulate_sv: noise scales must be positive");
  }
  Vector x(T), y(T);
  x(0) = x1;
  for (int k = 1; k < T; ++k) x(k) = x(k - 1) + params.sigma_x * rng.normal();
  for (int k = 0; k < T; ++k) y(k) = std::exp(x(k)) * params.sigma_y * rng.normal();
  return {std::move(x), std::move(y)};
}

}  // namespace dicpf
