#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tchain/error.hpp"

namespace tchain {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Vector = VectorX<double>;

/// Coupling condition at access points.
enum class Coupling { Dirichlet, Neumann };

/// Interval with endpoints lo <= hi. Openness is decided by the consumer.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Access points a_0 = 0 < a_1 < ... of a chain of transport equations on (0, L)
/// with constant velocity c.
///
/// Subdomains are numbered from 0 in code: subdomain p is (a_p, a_{p+1}) clipped to
/// (0, L), fed at a_p by the trace of subdomain p-1 plus control channel p.
class ChainLayout {
 public:
  /// Throws NonMonotone, Uncovered or BadParam.
  ChainLayout(std::vector<double> access_points, double L, double c);

  const std::vector<double>& access_points() const { return points_; }
  double point(Index i) const { return points_[static_cast<std::size_t>(i)]; }
  double length() const { return length_; }
  double velocity() const { return velocity_; }

  /// N_L: the index of the first access point with a_i >= L. Equals the number of
  /// subdomains and of control channels.
  Index num_subdomains() const { return num_subdomains_; }

  /// Minimum unclipped gap a_i - a_{i-1} over i <= N_L.
  double min_gap() const { return min_gap_; }
  /// Maximum unclipped gap over i <= N_L.
  double max_gap() const { return max_gap_; }

  /// Subdomain p clipped to (0, L).
  Interval subdomain(Index p) const {
    return {point(p), std::min(point(p + 1), length_)};
  }

  /// Subdomain containing omega with the (a_{p}, a_{p+1}] convention; omega = 0 maps
  /// to subdomain 0.
  Index subdomain_of(double omega) const;

 private:
  std::vector<double> points_;
  double length_;
  double velocity_;
  Index num_subdomains_ = 0;
  double min_gap_ = 0.0;
  double max_gap_ = 0.0;
};

inline ChainLayout build_chain(std::vector<double> access_points, double L, double c) {
  return ChainLayout(std::move(access_points), L, c);
}

/// Equidistant points 0, gap, 2 gap, ... up to the first point >= L.
ChainLayout equidistant_chain(double gap, double L, double c);

/// Points 0, L/2, L (two controlled subdomains).
ChainLayout midpoint_chain(double L, double c);

/// Uniform nodes 0, h, ..., L.
class SpatialGrid {
 public:
  /// Throws BadParam unless h > 0 and L is an integer multiple of h.
  SpatialGrid(double L, double h);

  /// Grid on (0, L) of the layout; throws GridMisaligned unless every access point in
  /// [0, L] is a node.
  static SpatialGrid aligned(const ChainLayout& layout, double h);

  double spacing() const { return spacing_; }
  double length() const { return length_; }
  Index cells() const { return cells_; }
  Index size() const { return cells_ + 1; }
  double node(Index j) const { return static_cast<double>(j) * spacing_; }

  /// Node index of x when x lies on a node within 1e-12 L.
  std::optional<Index> exact_node(double x) const;
  /// As exact_node but throws GridMisaligned.
  Index node_index(double x) const;

  bool operator==(const SpatialGrid& other) const {
    return cells_ == other.cells_ && length_ == other.length_;
  }

 private:
  double length_;
  double spacing_;
  Index cells_;
};

/// Node value of a grid function evaluated at an arbitrary point in [lo, hi] by
/// linear interpolation; exact at nodes. The span starts at node `first`.
template <typename Derived>
typename Derived::Scalar interpolate_nodes(const Eigen::MatrixBase<Derived>& values,
                                           double h, double origin, double x) {
  const Index last = values.size() - 1;
  const double s = (x - origin) / h;
  const double r = std::round(s);
  if (std::abs(s - r) < 1e-9) {
    const auto j = static_cast<Index>(r);
    if (j >= 0 && j <= last) return values(j);
  }
  if (s <= 0.0) return values(0);
  if (s >= static_cast<double>(last)) return values(last);
  const auto j = static_cast<Index>(std::floor(s));
  const double w = s - static_cast<double>(j);
  return (1.0 - w) * values(j) + w * values(j + 1);
}

/// Grid function on [0, L].
template <typename Scalar>
struct BasicStateField {
  SpatialGrid grid;
  VectorX<Scalar> values;

  BasicStateField(SpatialGrid g, VectorX<Scalar> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw Error(Errc::GridMismatch, "field length does not match grid");
    if (!values.allFinite()) throw Error(Errc::BadInitialData, "non-finite field value");
  }

  static BasicStateField zero(const SpatialGrid& g) {
    return BasicStateField(g, VectorX<Scalar>::Zero(g.size()));
  }

  Scalar at(double x) const {
    return interpolate_nodes(values, grid.spacing(), 0.0, x);
  }
};

using StateField = BasicStateField<double>;

/// Node ranges [first, last] of every subdomain on an aligned grid. Interface nodes
/// are shared between neighbours.
struct ChainPartition {
  SpatialGrid grid;
  std::vector<Index> first;
  std::vector<Index> last;

  ChainPartition(const ChainLayout& layout, const SpatialGrid& grid);

  Index num_pieces() const { return static_cast<Index>(first.size()); }
  Index piece_size(Index p) const { return last[p] - first[p] + 1; }
  /// Total number of stored values (interface nodes counted twice).
  Index total_size() const;
  bool operator==(const ChainPartition&) const = default;
};

/// One grid function per subdomain, each including both subdomain endpoints, so
/// transmission jumps at access points are represented exactly.
template <typename Scalar>
class BasicPiecewiseField {
 public:
  BasicPiecewiseField(ChainPartition partition, std::vector<VectorX<Scalar>> pieces)
      : partition_(std::move(partition)), pieces_(std::move(pieces)) {
    if (static_cast<Index>(pieces_.size()) != partition_.num_pieces())
      throw Error(Errc::GridMismatch, "piece count does not match partition");
    for (Index p = 0; p < partition_.num_pieces(); ++p)
      if (pieces_[p].size() != partition_.piece_size(p))
        throw Error(Errc::GridMismatch, "piece length does not match partition");
  }

  static BasicPiecewiseField zero(const ChainPartition& partition) {
    std::vector<VectorX<Scalar>> pieces;
    for (Index p = 0; p < partition.num_pieces(); ++p)
      pieces.push_back(VectorX<Scalar>::Zero(partition.piece_size(p)));
    return BasicPiecewiseField(partition, std::move(pieces));
  }

  /// Splits a continuous grid function into pieces.
  static BasicPiecewiseField from_field(const ChainPartition& partition,
                                        const BasicStateField<Scalar>& field) {
    if (!(field.grid == partition.grid))
      throw Error(Errc::GridMismatch, "field grid differs from partition grid");
    std::vector<VectorX<Scalar>> pieces;
    for (Index p = 0; p < partition.num_pieces(); ++p)
      pieces.push_back(field.values.segment(partition.first[p], partition.piece_size(p)));
    return BasicPiecewiseField(partition, std::move(pieces));
  }

  /// Node j takes the value of the subdomain owning it under (a_p, a_{p+1}]; node 0
  /// belongs to subdomain 0.
  BasicStateField<Scalar> to_field() const {
    VectorX<Scalar> v(partition_.grid.size());
    for (Index p = 0; p < num_pieces(); ++p) {
      const Index skip = (p == 0) ? 0 : 1;
      v.segment(partition_.first[p] + skip, partition_.piece_size(p) - skip) =
          pieces_[p].tail(partition_.piece_size(p) - skip);
    }
    return BasicStateField<Scalar>(partition_.grid, std::move(v));
  }

  const ChainPartition& partition() const { return partition_; }
  const SpatialGrid& grid() const { return partition_.grid; }
  Index num_pieces() const { return partition_.num_pieces(); }
  const VectorX<Scalar>& piece(Index p) const { return pieces_[p]; }
  VectorX<Scalar>& piece(Index p) { return pieces_[p]; }

  double origin(Index p) const { return partition_.grid.node(partition_.first[p]); }

  /// Value of subdomain p at x (clamped to the subdomain).
  Scalar value(Index p, double x) const {
    return interpolate_nodes(pieces_[p], partition_.grid.spacing(), origin(p), x);
  }

  /// All pieces stacked in subdomain order.
  VectorX<Scalar> stacked() const {
    VectorX<Scalar> out(partition_.total_size());
    Index offset = 0;
    for (const auto& piece : pieces_) {
      out.segment(offset, piece.size()) = piece;
      offset += piece.size();
    }
    return out;
  }

  static BasicPiecewiseField unstack(const ChainPartition& partition,
                                     const Eigen::Ref<const VectorX<Scalar>>& stacked) {
    std::vector<VectorX<Scalar>> pieces;
    Index offset = 0;
    for (Index p = 0; p < partition.num_pieces(); ++p) {
      pieces.push_back(stacked.segment(offset, partition.piece_size(p)));
      offset += partition.piece_size(p);
    }
    return BasicPiecewiseField(partition, std::move(pieces));
  }

 private:
  ChainPartition partition_;
  std::vector<VectorX<Scalar>> pieces_;
};

using PiecewiseField = BasicPiecewiseField<double>;

/// Smooth bump exp(1 + 1/((2(w - eps1)/eps2)^2 - 1)) on (eps1 - eps2/2, eps1 + eps2/2),
/// zero elsewhere including the support endpoints.
double bump_value(double eps1, double eps2, double omega);

/// Throws BadParam for eps2 <= 0 and SupportOutOfDomain when the support leaves [0, L].
StateField bump_initial(double eps1, double eps2, const SpatialGrid& grid);

/// Zeroes every node outside the closed interval. Throws BadInterval unless the
/// interval is ordered and inside [0, L].
StateField restrict(const StateField& field, Interval interval);

/// Time-indexed sequence of piecewise fields.
struct Trajectory {
  std::vector<double> times;
  std::vector<PiecewiseField> states;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
};

/// Per-channel samples u_p(t_k) on a uniform time grid t_k = k tau, k = 0..K,
/// evaluated between samples by linear interpolation.
class ControlSignal {
 public:
  ControlSignal() = default;
  /// values: (K+1) x channels. Throws BadParam on non-finite values or tau <= 0.
  ControlSignal(double tau, Eigen::MatrixXd values);

  static ControlSignal zero(double tau, Index steps, Index channels) {
    return ControlSignal(tau, Eigen::MatrixXd::Zero(steps + 1, channels));
  }

  double step() const { return tau_; }
  Index steps() const { return values_.rows() - 1; }
  Index channels() const { return values_.cols(); }
  double horizon() const { return tau_ * static_cast<double>(steps()); }
  double time(Index k) const { return tau_ * static_cast<double>(k); }
  const Eigen::MatrixXd& values() const { return values_; }

  /// u_p(t) with linear interpolation; zero for t < 0, held constant past the horizon.
  double operator()(Index channel, double t) const;
  /// Exact integral of the interpolant over [0, t] (trapezoid on the grid).
  double integral(Index channel, double t) const;

 private:
  double tau_ = 1.0;
  Eigen::MatrixXd values_;
  // cumulative trapezoid integrals at grid times
  Eigen::MatrixXd cumulative_;
};

}  // namespace tchain
