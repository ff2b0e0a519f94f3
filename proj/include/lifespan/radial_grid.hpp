#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lifespan {

/// Surface measure of the unit sphere S^{n-1}, i.e. n * omega_n with omega_n the
/// volume of the unit ball. For n = 1 this is 2 (the two points of S^0).
inline double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: throw std::invalid_argument("sphere_area: dim must be 1, 2 or 3");
  }
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int dim) { return sphere_area(dim) / dim; }

/// Japanese bracket <t> = sqrt(1 + t^2).
template <typename Scalar>
Scalar japanese(Scalar t) {
  using std::sqrt;
  return sqrt(Scalar(1) + t * t);
}

/// Radial profile sampled at r_i = i * dr, i = 0..size-1, on R^n.
class RadialGridFunction {
 public:
  RadialGridFunction() = default;

  RadialGridFunction(int dim, double dr, Eigen::ArrayXd values)
      : dim_(dim), dr_(dr), values_(std::move(values)) {
    if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("RadialGridFunction: dim must be 1, 2 or 3");
    if (!(dr_ > 0.0)) throw std::invalid_argument("RadialGridFunction: dr must be positive");
    if (values_.size() < 2) throw std::invalid_argument("RadialGridFunction: need at least 2 nodes");
  }

  /// Grid with nodes up to (and including) r_max, zero-filled.
  static RadialGridFunction zeros(int dim, double dr, double r_max) {
    const auto nodes = static_cast<Eigen::Index>(std::llround(r_max / dr)) + 1;
    return {dim, dr, Eigen::ArrayXd::Zero(std::max<Eigen::Index>(nodes, 2))};
  }

  /// Samples f(r) at every node.
  template <typename F>
  static RadialGridFunction sample(int dim, double dr, double r_max, F&& f) {
    auto g = zeros(dim, dr, r_max);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.values_[i] = f(g.radius(i));
    return g;
  }

  int dim() const { return dim_; }
  double dr() const { return dr_; }
  Eigen::Index size() const { return values_.size(); }
  double r_max() const { return dr_ * static_cast<double>(values_.size() - 1); }
  double radius(Eigen::Index i) const { return dr_ * static_cast<double>(i); }

  const Eigen::ArrayXd& values() const { return values_; }
  Eigen::ArrayXd& values() { return values_; }
  double operator[](Eigen::Index i) const { return values_[i]; }
  double& operator[](Eigen::Index i) { return values_[i]; }

  /// Node radii as an array.
  Eigen::ArrayXd radii() const {
    return Eigen::ArrayXd::LinSpaced(size(), 0.0, r_max());
  }

  /// Composite-trapezoid weights w_i such that sum_i w_i f(r_i) approximates
  /// the integral of the radial function f over the ball of radius r_max in R^n.
  Eigen::ArrayXd trapezoid_weights() const {
    Eigen::ArrayXd w = radii().pow(dim_ - 1) * (sphere_area(dim_) * dr_);
    w[0] *= 0.5;
    w[size() - 1] *= 0.5;
    return w;
  }

  double integrate() const { return (trapezoid_weights() * values_).sum(); }

  bool same_layout(const RadialGridFunction& other) const {
    return dim_ == other.dim_ && dr_ == other.dr_ && size() == other.size();
  }

  RadialGridFunction with_values(Eigen::ArrayXd v) const { return {dim_, dr_, std::move(v)}; }

 private:
  int dim_ = 1;
  double dr_ = 1.0;
  Eigen::ArrayXd values_ = Eigen::ArrayXd::Zero(2);
};

/// Integral over R^n of the product of a radial weight array and a grid function.
inline double integrate_product(const RadialGridFunction& f, const Eigen::ArrayXd& g) {
  return (f.trapezoid_weights() * f.values() * g).sum();
}

}  // namespace lifespan
