#pragma once

#include "dicpf/common.hpp"
#include "dicpf/initial_measure.hpp"
#include "dicpf/model.hpp"
#include "dicpf/rng.hpp"

namespace dicpf {

/// Static target: a single time step with a flat improper initial measure
/// and potential G_1(x) = N(x; 0, sigma^2 I_d). Used to study how the
/// samplers behave as the state dimension grows.
struct MvnStaticParams {
  int dim = 1;
  double sigma = 1.0;
};

class MvnStaticModel {
 public:
  explicit MvnStaticModel(MvnStaticParams params) : params_(params) {
    if (params_.dim < 1) throw ConfigError("MvnStaticModel: dim must be >= 1");
    if (params_.sigma <= 0.0) throw ConfigError("MvnStaticModel: sigma must be positive");
    initial_ = InitialMeasure::uniform_improper(Domain::all(params_.dim));
  }

  int num_steps() const { return 1; }
  int state_dim() const { return params_.dim; }
  const InitialMeasure& initial() const { return initial_; }
  const MvnStaticParams& params() const { return params_; }

  Vector sample_transition(int, const Vector&, RngStream&) const {
    throw Error("MvnStaticModel: single-step model has no transitions");
  }

  double log_transition_density(int, const Vector&, const Vector&) const {
    throw Error("MvnStaticModel: single-step model has no transitions");
  }

  bool has_transition_density() const { return true; }  // vacuous at T == 1

  double log_potential(int, const Vector&, const Vector& cur) const {
    static const double kLog2Pi = std::log(2.0 * M_PI);
    return -0.5 * params_.dim * kLog2Pi - params_.dim * std::log(params_.sigma) -
           0.5 * cur.squaredNorm() / (params_.sigma * params_.sigma);
  }

 private:
  MvnStaticParams params_;
  InitialMeasure initial_;
};

inline MvnStaticModel make_mvn_static(const MvnStaticParams& params) {
  return MvnStaticModel(params);
}

}  // namespace dicpf
