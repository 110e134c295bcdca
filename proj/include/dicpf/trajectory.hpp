#pragma once

#include <utility>

#include "dicpf/common.hpp"

namespace dicpf {

/// A latent state path x_{1:T}, stored as a d x T matrix (one column per
/// time step). Time indices are 1-based throughout the library, matching
/// the subscripts of the model transitions and potentials.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(Matrix values) : values_(std::move(values)) {}

  static Trajectory zero(int dim, int length) { return Trajectory(Matrix::Zero(dim, length)); }

  int length() const { return static_cast<int>(values_.cols()); }
  int dim() const { return static_cast<int>(values_.rows()); }
  bool empty() const { return values_.size() == 0; }

  /// State at time k, 1 <= k <= length().
  Eigen::Ref<const Vector> state(int k) const { return values_.col(k - 1); }
  Eigen::Ref<Vector> state(int k) { return values_.col(k - 1); }

  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

  /// x_{2:T} as a d x (T-1) block.
  Eigen::Ref<const Matrix> tail() const { return values_.rightCols(values_.cols() - 1); }

 private:
  Matrix values_;
};

}  // namespace dicpf
