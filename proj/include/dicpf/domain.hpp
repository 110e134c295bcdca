#pragma once

#include <functional>
#include <utility>

#include "dicpf/common.hpp"

namespace dicpf {

/// Support of an initial measure. `All` is R^d, `Box` an axis-aligned box
/// (bounds may be infinite), and `Custom` an indicator set together with a
/// pair of maps between the full state and the unconstrained coordinates a
/// random-walk proposal moves in (identity for All/Box).
class Domain {
 public:
  enum class Kind { All, Box, Custom };

  static Domain all(int dim) {
    Domain d;
    d.kind_ = Kind::All;
    d.dim_ = dim;
    d.free_dim_ = dim;
    return d;
  }

  static Domain box(Vector lower, Vector upper) {
    if (lower.size() != upper.size()) throw ConfigError("Domain::box: bound dimension mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(lower(i) < upper(i))) throw ConfigError("Domain::box: lower must be below upper");
    }
    Domain d;
    d.kind_ = Kind::Box;
    d.dim_ = static_cast<int>(lower.size());
    d.free_dim_ = d.dim_;
    d.lower_ = std::move(lower);
    d.upper_ = std::move(upper);
    return d;
  }

  static Domain custom(int dim, int free_dim,
                       std::function<bool(const Vector&)> indicator,
                       std::function<Vector(const Vector&)> to_free,
                       std::function<Vector(const Vector&)> from_free) {
    Domain d;
    d.kind_ = Kind::Custom;
    d.dim_ = dim;
    d.free_dim_ = free_dim;
    d.indicator_ = std::move(indicator);
    d.to_free_ = std::move(to_free);
    d.from_free_ = std::move(from_free);
    return d;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }

  /// Dimension of the unconstrained proposal coordinates.
  int free_dim() const { return free_dim_; }

  bool contains(const Vector& x) const {
    switch (kind_) {
      case Kind::All:
        return true;
      case Kind::Box:
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (x(i) < lower_(i) || x(i) > upper_(i)) return false;
        }
        return true;
      case Kind::Custom:
        return indicator_(x);
    }
    return false;
  }

  Vector to_free(const Vector& x) const {
    return kind_ == Kind::Custom ? to_free_(x) : x;
  }

  Vector from_free(const Vector& z) const {
    return kind_ == Kind::Custom ? from_free_(z) : z;
  }

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

 private:
  Kind kind_ = Kind::All;
  int dim_ = 0;
  int free_dim_ = 0;
  Vector lower_, upper_;
  std::function<bool(const Vector&)> indicator_;
  std::function<Vector(const Vector&)> to_free_;
  std::function<Vector(const Vector&)> from_free_;
};

}  // namespace dicpf
