#include "tchain/norms.hpp"

#include <vector>

namespace tchain {

namespace {

void check_interval(const StateField& field, Interval interval) {
  const double L = field.grid.length();
  const double tol = 1e-12 * L;
  if (!(interval.lo <= interval.hi) || interval.lo < -tol || interval.hi > L + tol)
    throw Error(Errc::BadInterval, "norm interval must lie inside [0, L]");
}

Vector weights_for_piece(const PiecewiseField& field, Index p, WeightSpec weight) {
  const Index n = field.piece(p).size();
  const double h = field.grid().spacing();
  const double x0 = field.origin(p);
  Vector w(n);
  for (Index j = 0; j < n; ++j)
    w(j) = std::exp(weight.rate * std::abs(x0 + static_cast<double>(j) * h - weight.center));
  return w;
}

}  // namespace

double l2(const StateField& field, Interval interval) {
  check_interval(field, interval);
  const double h = field.grid.spacing();
  std::vector<double> xs{interval.lo};
  const auto first = static_cast<Index>(std::floor(interval.lo / h)) + 1;
  for (Index j = std::max<Index>(first, 0); j < field.grid.size(); ++j) {
    const double x = field.grid.node(j);
    if (x >= interval.hi) break;
    if (x > interval.lo) xs.push_back(x);
  }
  xs.push_back(interval.hi);
  double sum = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const double a = field.at(xs[k - 1]);
    const double b = field.at(xs[k]);
    sum += 0.5 * (xs[k] - xs[k - 1]) * (a * a + b * b);
  }
  return std::sqrt(sum);
}

double l2(const StateField& field) { return l2(field.values, field.grid.spacing()); }

double h1(const StateField& field, Interval interval) {
  check_interval(field, interval);
  const auto lo = field.grid.exact_node(interval.lo);
  const auto hi = field.grid.exact_node(interval.hi);
  if (!lo || !hi) throw Error(Errc::BadInterval, "H1 interval endpoints must be grid nodes");
  return h1(field.values.segment(*lo, *hi - *lo + 1), field.grid.spacing());
}

double h1(const StateField& field) { return h1(field.values, field.grid.spacing()); }

double l2_piece(const PiecewiseField& field, Index p) {
  return l2(field.piece(p), field.grid().spacing());
}

double h1_piece(const PiecewiseField& field, Index p) {
  return h1(field.piece(p), field.grid().spacing());
}

double l2(const PiecewiseField& field) {
  double sum = 0.0;
  for (Index p = 0; p < field.num_pieces(); ++p)
    sum += trapezoid_squared(field.piece(p), field.grid().spacing());
  return std::sqrt(sum);
}

double h1(const PiecewiseField& field) {
  double sum = 0.0;
  for (Index p = 0; p < field.num_pieces(); ++p) {
    const double n = h1_piece(field, p);
    sum += n * n;
  }
  return std::sqrt(sum);
}

double weighted_l2(const PiecewiseField& field, WeightSpec weight) {
  double sum = 0.0;
  for (Index p = 0; p < field.num_pieces(); ++p)
    sum += trapezoid_squared(field.piece(p), weights_for_piece(field, p, weight),
                             field.grid().spacing());
  return std::sqrt(sum);
}

double weighted_l2_spacetime(const Trajectory& trajectory, WeightSpec weight) {
  if (trajectory.empty()) throw Error(Errc::EmptyTrajectory, "no time slices");
  if (weight.rate < 0.0) throw Error(Errc::BadParam, "weight rate must be >= 0");
  if (trajectory.size() == 1) return weighted_l2(trajectory.states.front(), weight);
  double sum = 0.0;
  double previous = 0.0;
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const double n = weighted_l2(trajectory.states[k], weight);
    const double sq = n * n;
    if (k > 0) sum += 0.5 * (trajectory.times[k] - trajectory.times[k - 1]) * (previous + sq);
    previous = sq;
  }
  return std::sqrt(sum);
}

}  // namespace tchain
