#pragma once

#include <cmath>
#include <vector>

#include "dicpf/common.hpp"

namespace dicpf {

/// Path selection rule applied after the forward pass.
enum class PathSelector { AncestorTracing, BackwardSampling };

/// Full output of a conditional forward pass: particle values, normalised
/// weights and ancestor indices. Slot 0 always carries the reference path
/// (ancestors(k)(0) == 0 for every k). Indices are zero-based in memory;
/// file outputs are one-based.
struct ParticleSystem {
  int num_steps = 0;      // T
  int num_particles = 0;  // N
  int state_dim = 0;      // d

  std::vector<Matrix> particles;        // T entries, d x N
  std::vector<Vector> weights;          // T entries, normalised
  std::vector<Vector> log_weights;      // log of the normalised weights
  std::vector<IndexVector> ancestors;   // T-1 entries

  /// Checks the structural invariants; throws on violation. Test support.
  void validate(double tol = 1e-12) const {
    if (static_cast<int>(particles.size()) != num_steps ||
        static_cast<int>(weights.size()) != num_steps ||
        static_cast<int>(ancestors.size()) != num_steps - 1) {
      throw Error("ParticleSystem: inconsistent sizes");
    }
    for (int k = 0; k < num_steps; ++k) {
      if (weights[k].minCoeff() < 0.0) throw Error("ParticleSystem: negative weight");
      if (std::abs(weights[k].sum() - 1.0) > tol) throw Error("ParticleSystem: weight row not normalised");
    }
    for (int k = 0; k + 1 < num_steps; ++k) {
      if (ancestors[k](0) != 0) throw Error("ParticleSystem: reference lineage not pinned");
      if (ancestors[k].minCoeff() < 0 || ancestors[k].maxCoeff() >= num_particles) {
        throw Error("ParticleSystem: ancestor index out of range");
      }
    }
  }
};

/// First-step information handed to the adaptation rules: the selected slot
/// B_1, the time-1 weights (backward-sampling weights V_1 when available,
/// filter weights W_1 under ancestor tracing) and the time-1 particles.
struct AdaptData {
  int b1 = 0;
  Vector first_weights;
  Matrix first_particles;  // d x N
  PathSelector selector = PathSelector::BackwardSampling;

  /// Probability that the reference's first state was replaced.
  double alpha() const { return 1.0 - first_weights(0); }
};

}  // namespace dicpf
