#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "tchain/core.hpp"

namespace tchain {

/// Trapezoid rule for the integral of v^2 over uniformly spaced samples.
template <typename Derived>
double trapezoid_squared(const Eigen::MatrixBase<Derived>& v, double h) {
  const Index n = v.size();
  if (n < 2) return 0.0;
  const double ends = 0.5 * (v(0) * v(0) + v(n - 1) * v(n - 1));
  return h * (v.squaredNorm() - ends);
}

/// Same with a pointwise weight applied to v before squaring.
template <typename Derived, typename WeightDerived>
double trapezoid_squared(const Eigen::MatrixBase<Derived>& v,
                         const Eigen::MatrixBase<WeightDerived>& weight, double h) {
  return trapezoid_squared(v.cwiseProduct(weight), h);
}

/// Central differences inside, second-order one-sided differences at both ends
/// (first order when only two samples exist).
template <typename Derived>
Vector difference_quotient(const Eigen::MatrixBase<Derived>& v, double h) {
  const Index n = v.size();
  Vector d = Vector::Zero(n);
  if (n < 2) return d;
  if (n == 2) {
    d.setConstant((v(1) - v(0)) / h);
    return d;
  }
  d.segment(1, n - 2) = (v.tail(n - 2) - v.head(n - 2)) / (2.0 * h);
  d(0) = (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h);
  d(n - 1) = (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h);
  return d;
}

/// L^2 norm over a sampled interval.
template <typename Derived>
double l2(const Eigen::MatrixBase<Derived>& v, double h) {
  return std::sqrt(trapezoid_squared(v, h));
}

/// H^1 norm over a sampled interval: sqrt(|v|^2 + |Dv|^2).
template <typename Derived>
double h1(const Eigen::MatrixBase<Derived>& v, double h) {
  const Vector d = difference_quotient(v, h);
  return std::sqrt(trapezoid_squared(v, h) + trapezoid_squared(d, h));
}

/// L^2 norm of the field over [lo, hi]; endpoints off the grid are linearly
/// interpolated. Throws BadInterval.
double l2(const StateField& field, Interval interval);
double l2(const StateField& field);

/// H^1 norm over [lo, hi]; both endpoints must be nodes. Throws BadInterval.
double h1(const StateField& field, Interval interval);
double h1(const StateField& field);

/// Norms summed over subdomains; jumps at access points do not enter the derivative.
double l2(const PiecewiseField& field);
double h1(const PiecewiseField& field);
double l2_piece(const PiecewiseField& field, Index p);
double h1_piece(const PiecewiseField& field, Index p);

struct WeightSpec {
  double rate = 0.0;    // mu
  double center = 0.0;  // eps1
};

/// || exp(mu |w - eps1|) x ||_{L^2(0,T; L^2(0,L))}, trapezoid in space and time.
/// A single time slice yields the spatial weighted norm. Throws EmptyTrajectory.
double weighted_l2_spacetime(const Trajectory& trajectory, WeightSpec weight);

/// Spatially weighted L^2 norm of one piecewise field.
double weighted_l2(const PiecewiseField& field, WeightSpec weight);

}  // namespace tchain
