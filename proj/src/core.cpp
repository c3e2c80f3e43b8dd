#include "tchain/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tchain {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonMonotone: return "NonMonotone";
    case Errc::Uncovered: return "Uncovered";
    case Errc::BadParam: return "BadParam";
    case Errc::SupportOutOfDomain: return "SupportOutOfDomain";
    case Errc::BadInterval: return "BadInterval";
    case Errc::GridMisaligned: return "GridMisaligned";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::NegativeTime: return "NegativeTime";
    case Errc::BcMismatch: return "BcMismatch";
    case Errc::BadInitialData: return "BadInitialData";
    case Errc::NoSufficientGap: return "NoSufficientGap";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::OutOfMemory: return "OutOfMemory";
    case Errc::EmptyTrajectory: return "EmptyTrajectory";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

ChainLayout::ChainLayout(std::vector<double> access_points, double L, double c)
    : points_(std::move(access_points)), length_(L), velocity_(c) {
  if (!(L > 0.0) || !std::isfinite(L)) throw Error(Errc::BadParam, "domain length must be > 0");
  if (!(c > 0.0) || !std::isfinite(c)) throw Error(Errc::BadParam, "velocity must be > 0");
  if (points_.empty() || points_.front() != 0.0)
    throw Error(Errc::NonMonotone, "access points must start at 0");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1]) || !std::isfinite(points_[i])) {
      std::ostringstream msg;
      msg << "access point " << i << " (" << points_[i] << ") does not exceed its predecessor";
      throw Error(Errc::NonMonotone, msg.str());
    }
  }
  if (points_.back() < L) {
    std::ostringstream msg;
    msg << "last access point " << points_.back() << " < L = " << L;
    throw Error(Errc::Uncovered, msg.str());
  }
  const auto first_covering = std::find_if(points_.begin() + 1, points_.end(),
                                           [L](double a) { return a >= L; });
  num_subdomains_ = static_cast<Index>(first_covering - points_.begin());
  min_gap_ = std::numeric_limits<double>::infinity();
  for (Index i = 1; i <= num_subdomains_; ++i) {
    const double gap = point(i) - point(i - 1);
    min_gap_ = std::min(min_gap_, gap);
    max_gap_ = std::max(max_gap_, gap);
  }
}

Index ChainLayout::subdomain_of(double omega) const {
  // first p with omega <= a_{p+1}
  const auto it = std::lower_bound(points_.begin() + 1,
                                   points_.begin() + num_subdomains_ + 1, omega);
  const Index p = static_cast<Index>(it - points_.begin()) - 1;
  return std::clamp<Index>(p, 0, num_subdomains_ - 1);
}

ChainLayout equidistant_chain(double gap, double L, double c) {
  if (!(gap > 0.0)) throw Error(Errc::BadParam, "gap must be > 0");
  std::vector<double> points{0.0};
  for (Index i = 1; points.back() < L; ++i) {
    const double a = gap * static_cast<double>(i);
    // snap to L when rounding leaves the last point a hair below it
    points.push_back(std::abs(a - L) <= 1e-12 * L ? L : a);
  }
  return ChainLayout(std::move(points), L, c);
}

ChainLayout midpoint_chain(double L, double c) { return ChainLayout({0.0, L / 2.0, L}, L, c); }

SpatialGrid::SpatialGrid(double L, double h) : length_(L) {
  if (!(L > 0.0) || !(h > 0.0) || !std::isfinite(L) || !std::isfinite(h))
    throw Error(Errc::BadParam, "grid needs L > 0 and h > 0");
  const double n = std::round(L / h);
  if (n < 1.0 || std::abs(n * h - L) > 1e-9 * L)
    throw Error(Errc::BadParam, "L is not an integer multiple of h");
  cells_ = static_cast<Index>(n);
  spacing_ = L / n;
}

std::optional<Index> SpatialGrid::exact_node(double x) const {
  const double j = std::round(x / spacing_);
  if (j < 0.0 || j > static_cast<double>(cells_)) return std::nullopt;
  if (std::abs(j * spacing_ - x) > 1e-12 * length_) return std::nullopt;
  return static_cast<Index>(j);
}

Index SpatialGrid::node_index(double x) const {
  if (auto j = exact_node(x)) return *j;
  std::ostringstream msg;
  msg << x << " is not a node of the grid with h = " << spacing_;
  throw Error(Errc::GridMisaligned, msg.str());
}

SpatialGrid SpatialGrid::aligned(const ChainLayout& layout, double h) {
  SpatialGrid grid(layout.length(), h);
  for (double a : layout.access_points()) {
    if (a > layout.length()) break;
    grid.node_index(a);
  }
  return grid;
}

ChainPartition::ChainPartition(const ChainLayout& layout, const SpatialGrid& g) : grid(g) {
  if (std::abs(layout.length() - g.length()) > 1e-12 * g.length())
    throw Error(Errc::GridMismatch, "grid length differs from layout length");
  for (Index p = 0; p < layout.num_subdomains(); ++p) {
    const Interval sub = layout.subdomain(p);
    first.push_back(g.node_index(sub.lo));
    last.push_back(g.node_index(sub.hi));
  }
}

Index ChainPartition::total_size() const {
  Index total = 0;
  for (Index p = 0; p < num_pieces(); ++p) total += piece_size(p);
  return total;
}

double bump_value(double eps1, double eps2, double omega) {
  const double s = 2.0 * (omega - eps1) / eps2;
  if (!(std::abs(s) < 1.0)) return 0.0;
  return std::exp(1.0 + 1.0 / (s * s - 1.0));
}

StateField bump_initial(double eps1, double eps2, const SpatialGrid& grid) {
  if (!(eps2 > 0.0)) throw Error(Errc::BadParam, "bump width must be > 0");
  const double tol = 1e-12 * grid.length();
  if (eps1 - eps2 / 2.0 < -tol || eps1 + eps2 / 2.0 > grid.length() + tol)
    throw Error(Errc::SupportOutOfDomain, "bump support leaves [0, L]");
  Vector v(grid.size());
  for (Index j = 0; j < grid.size(); ++j) v(j) = bump_value(eps1, eps2, grid.node(j));
  return StateField(grid, std::move(v));
}

StateField restrict(const StateField& field, Interval interval) {
  const double L = field.grid.length();
  const double tol = 1e-12 * L;
  if (!(interval.lo <= interval.hi) || interval.lo < -tol || interval.hi > L + tol)
    throw Error(Errc::BadInterval, "restriction interval must lie inside [0, L]");
  Vector v = field.values;
  for (Index j = 0; j < v.size(); ++j) {
    const double x = field.grid.node(j);
    if (x < interval.lo - tol || x > interval.hi + tol) v(j) = 0.0;
  }
  return StateField(field.grid, std::move(v));
}

ControlSignal::ControlSignal(double tau, Eigen::MatrixXd values)
    : tau_(tau), values_(std::move(values)) {
  if (!(tau > 0.0)) throw Error(Errc::BadParam, "control time step must be > 0");
  if (values_.rows() < 1) throw Error(Errc::BadParam, "control needs at least one sample");
  if (!values_.allFinite()) throw Error(Errc::BadParam, "non-finite control value");
  cumulative_ = Eigen::MatrixXd::Zero(values_.rows(), values_.cols());
  for (Index k = 1; k < values_.rows(); ++k)
    cumulative_.row(k) = cumulative_.row(k - 1) + 0.5 * tau_ * (values_.row(k - 1) + values_.row(k));
}

double ControlSignal::operator()(Index channel, double t) const {
  if (t < 0.0) return 0.0;
  return interpolate_nodes(values_.col(channel), tau_, 0.0, t);
}

double ControlSignal::integral(Index channel, double t) const {
  if (t <= 0.0) return 0.0;
  const double s = t / tau_;
  const Index last = steps();
  if (s >= static_cast<double>(last)) {
    return cumulative_(last, channel) + (t - horizon()) * values_(last, channel);
  }
  const double r = std::round(s);
  if (std::abs(s - r) < 1e-9) return cumulative_(static_cast<Index>(r), channel);
  const auto k = static_cast<Index>(std::floor(s));
  const double dt = t - time(k);
  const double u0 = values_(k, channel);
  const double slope = (values_(k + 1, channel) - u0) / tau_;
  return cumulative_(k, channel) + dt * u0 + 0.5 * slope * dt * dt;
}

}  // namespace tchain
