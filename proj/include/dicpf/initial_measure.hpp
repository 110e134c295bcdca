#pragma once

#include <utility>

#include "dicpf/common.hpp"
#include "dicpf/domain.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

namespace detail {

/// Lower Cholesky factor with a trace-scaled jitter retry; adapted
/// covariances can be numerically semi-definite.
inline Matrix chol_lower_spd(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  const double jitter = 1e-10 * sigma.trace() / static_cast<double>(sigma.rows());
  Matrix bumped = sigma + jitter * Matrix::Identity(sigma.rows(), sigma.cols());
  llt.compute(bumped);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  throw Error("chol_lower_spd: covariance is not positive definite");
}

}  // namespace detail

/// Initial measure M1 of a Feynman-Kac model: either a proper Gaussian or an
/// improper uniform measure on a domain. Improper measures admit no
/// normalised sampler.
class InitialMeasure {
 public:
  enum class Kind { Gaussian, UniformImproper };

  static InitialMeasure gaussian(Vector mu, Matrix sigma) {
    const int d = static_cast<int>(mu.size());
    if (sigma.rows() != d || sigma.cols() != d) {
      throw ConfigError("InitialMeasure::gaussian: covariance shape mismatch");
    }
    const double scale = sigma.cwiseAbs().maxCoeff();
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0)) {
      throw ConfigError("InitialMeasure::gaussian: covariance is not symmetric");
    }
    InitialMeasure m;
    m.kind_ = Kind::Gaussian;
    m.mu_ = std::move(mu);
    m.sigma_ = std::move(sigma);
    m.chol_ = detail::chol_lower_spd(m.sigma_);
    m.domain_ = Domain::all(d);
    double log_det = 0.0;
    for (int i = 0; i < d; ++i) log_det += std::log(m.chol_(i, i));
    m.log_norm_ = -0.5 * d * std::log(2.0 * M_PI) - log_det;
    return m;
  }

  static InitialMeasure uniform_improper(Domain domain) {
    InitialMeasure m;
    m.kind_ = Kind::UniformImproper;
    m.domain_ = std::move(domain);
    return m;
  }

  Kind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == Kind::Gaussian; }
  int dim() const { return is_gaussian() ? static_cast<int>(mu_.size()) : domain_.dim(); }
  const Domain& domain() const { return domain_; }

  const Vector& mean() const { return mu_; }
  const Matrix& cov() const { return sigma_; }
  const Matrix& chol_lower() const { return chol_; }

  /// Exact draw; only proper measures can be sampled.
  Vector sample(RngStream& rng) const {
    if (!is_gaussian()) {
      throw ImproperM1Error("InitialMeasure::sample: improper measure has no normalised sampler");
    }
    return mu_ + chol_ * rng.normal_vector(dim());
  }

  /// Log density. For the uniform improper case this is the unnormalised
  /// log indicator (0 inside the domain, -inf outside).
  double log_density(const Vector& x) const {
    if (is_gaussian()) {
      const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mu_);
      return log_norm_ - 0.5 * z.squaredNorm();
    }
    return domain_.contains(x) ? 0.0 : kNegInf;
  }

 private:
  Kind kind_ = Kind::UniformImproper;
  Vector mu_;
  Matrix sigma_;
  Matrix chol_;
  double log_norm_ = 0.0;
  Domain domain_ = Domain::all(0);
};

}  // namespace dicpf
