#pragma once

#include <utility>

#include "dicpf/common.hpp"
#include "dicpf/models/noisy_ar.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

/// Exact filter/smoother for the scalar linear-Gaussian AR family. Supports
/// both the proper Gaussian and the flat improper first-state prior; in the
/// flat case the first update starts from zero information and the marginal
/// log-likelihood is the proper conditional p(y_{2:T} | y_1).
/// Serves as the closed-form oracle for the particle smoothers.
struct KalmanResult {
  Vector filt_mean, filt_var;      // p(x_k | y_{1:k})
  Vector pred_mean, pred_var;      // p(x_k | y_{1:k-1}); infinite variance at k=1 for flat priors
  Vector smooth_mean, smooth_var;  // p(x_k | y_{1:T})
  double loglik = 0.0;
};

inline KalmanResult kalman_smooth(const NoisyArParams& params, const Vector& y) {
  const int T = static_cast<int>(y.size());
  if (T < 1) throw ConfigError("kalman_smooth: empty dataset");
  const double rho = params.rho;
  const double qx = params.sigma_x * params.sigma_x;
  const double ry = params.sigma_y * params.sigma_y;

  KalmanResult out;
  out.filt_mean.resize(T);
  out.filt_var.resize(T);
  out.pred_mean.resize(T);
  out.pred_var.resize(T);
  out.smooth_mean.resize(T);
  out.smooth_var.resize(T);

  // First update in information form so that zero prior information (flat
  // prior) is exact.
  if (params.flat_prior) {
    out.pred_mean(0) = 0.0;
    out.pred_var(0) = kInf;
    out.filt_mean(0) = y(0);
    out.filt_var(0) = ry;
  } else {
    const double p0 = params.sigma1 * params.sigma1;
    out.pred_mean(0) = 0.0;
    out.pred_var(0) = p0;
    const double s = p0 + ry;
    out.loglik += gaussian_logpdf(y(0), 0.0, std::sqrt(s));
    const double gain = p0 / s;
    out.filt_mean(0) = gain * y(0);
    out.filt_var(0) = (1.0 - gain) * p0;
  }

  for (int k = 1; k < T; ++k) {
    out.pred_mean(k) = rho * out.filt_mean(k - 1);
    out.pred_var(k) = rho * rho * out.filt_var(k - 1) + qx;
    const double s = out.pred_var(k) + ry;
    out.loglik += gaussian_logpdf(y(k), out.pred_mean(k), std::sqrt(s));
    const double gain = out.pred_var(k) / s;
    out.filt_mean(k) = out.pred_mean(k) + gain * (y(k) - out.pred_mean(k));
    out.filt_var(k) = (1.0 - gain) * out.pred_var(k);
  }

  out.smooth_mean(T - 1) = out.filt_mean(T - 1);
  out.smooth_var(T - 1) = out.filt_var(T - 1);
  for (int k = T - 2; k >= 0; --k) {
    const double c = rho * out.filt_var(k) / out.pred_var(k + 1);
    out.smooth_mean(k) = out.filt_mean(k) + c * (out.smooth_mean(k + 1) - out.pred_mean(k + 1));
    out.smooth_var(k) = out.filt_var(k) + c * c * (out.smooth_var(k + 1) - out.pred_var(k + 1));
  }
  return out;
}

/// One exact joint draw x_{1:T} ~ p(. | y_{1:T}) by forward filtering and
/// backward sampling.
inline Vector kalman_posterior_sample(const NoisyArParams& params, const Vector& y,
                                      RngStream& rng) {
  const KalmanResult kf = kalman_smooth(params, y);
  const int T = static_cast<int>(y.size());
  const double rho = params.rho;
  Vector x(T);
  x(T - 1) = kf.filt_mean(T - 1) + std::sqrt(kf.filt_var(T - 1)) * rng.normal();
  for (int k = T - 2; k >= 0; --k) {
    const double c = rho * kf.filt_var(k) / kf.pred_var(k + 1);
    const double mean = kf.filt_mean(k) + c * (x(k + 1) - kf.pred_mean(k + 1));
    const double var = kf.filt_var(k) - c * rho * kf.filt_var(k);
    x(k) = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();
  }
  return x;
}

}  // namespace dicpf
