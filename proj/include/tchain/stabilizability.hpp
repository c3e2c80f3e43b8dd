#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>

#include "tchain/core.hpp"

namespace tchain {

/// Result of the bounded-gap test over a finite horizon. The horizon records how
/// far the sequence was actually checked; nothing beyond it is claimed.
struct GapReport {
  double max_gap = 0.0;
  Index argmax = 0;  // i with a_{i+1} - a_i = max_gap
  Index horizon = 0;
  double bound = std::numeric_limits<double>::infinity();
  bool stabilizable = false;
  std::optional<double> L0;
};

/// max_{i < horizon} (a_{i+1} - a_i), compared against `bound` (gap == bound passes).
/// Throws NonMonotone, BadParam when fewer than horizon + 1 points are given.
GapReport gap_criterion(std::span<const double> points, Index horizon,
                        double bound = std::numeric_limits<double>::infinity());

/// Gaps up to N_L of the layout.
GapReport gap_criterion(const ChainLayout& layout,
                        double bound = std::numeric_limits<double>::infinity());

/// Worst gap across a family of layouts indexed by domain length, e.g. the
/// midpoint family whose single gap grows like L/2.
GapReport family_gap_criterion(const std::function<ChainLayout(double)>& family,
                               std::span<const double> lengths,
                               double bound = std::numeric_limits<double>::infinity());

struct IntervalCheck {
  bool disjoint = false;  // the open interval contains no access point
  double length = 0.0;
};

/// Tests the open interval (lo, hi) against the access points. Throws BadInterval
/// unless 0 <= lo <= hi.
IntervalCheck interval_criterion(std::span<const double> points, Interval interval);
IntervalCheck interval_criterion(const ChainLayout& layout, Interval interval);

/// Exhaustive scan over every interval whose endpoints are access points among the
/// first horizon + 1. Returns the longest access-point-free interval found; the
/// bounded-interval condition holds for L0 iff the result is <= L0.
double longest_free_interval_scan(std::span<const double> points, Index horizon);

struct DecayConstants {
  Coupling variant = Coupling::Dirichlet;
  double M = 1.0;
  double k = 1.0;
  // Neumann only
  double K1 = 0.0;
  double K2 = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  double c0 = 0.0;
  double dt = 0.0;  // Delta / c
};

/// M = exp(2 k L0 / c). Throws BadParam unless all inputs are > 0.
DecayConstants dirichlet_constants(double L0, double k, double c);

/// Uniform trace bound |v(0)|^2 <= c0 |v|^2_{H^1(0,a)} for a >= delta.
double default_trace_constant(double delta);

/// Neumann envelope constants with k = c:
///   K1 = 2 c0 L0 e^{c dt} + 2 (L0/c) e^{2 c dt} + 1 + 1/c
///   K2 = L0 (c0 + 1/c) e^{2 (L0 + c dt)}
///   M1^2 = K1 e^{2 L0},  M2^2 = 2 K2 + e^{2 (L0 + c dt)},  M = max(M1, M2)
/// with dt = delta / c. c0 defaults to default_trace_constant(delta).
DecayConstants neumann_constants(double L0, double delta, double c,
                                 std::optional<double> c0 = std::nullopt);

/// M1 for a first subdomain of length a1 <= L0 instead of the L0-uniform bound.
double neumann_m1_for_length(const DecayConstants& constants, double a1);

struct Certificate {
  double L0_target = 0.0;
  Index gap_index = 0;  // gap is (a_j, a_{j+1})
  Interval gap;
  double t_star = 0.0;
  Interval support;
  double epsilon = 0.0;
  double envelope_factor = 0.0;  // M exp(-k t_star), < 1 when M > 1
};

/// Counterexample data for the claim "no (M, k) works": an initial value supported
/// on (a_j, a_j + eps) inside a gap longer than L0 + eps is transported untouched up
/// to t_star = L0 / (2c). Throws NoSufficientGap or BadParam.
Certificate worst_case_certificate(double L0, double eps, const ChainLayout& layout,
                                   double M, double k);

/// Same with L0 = 3 c |ln M / k|.
Certificate worst_case_certificate(double eps, const ChainLayout& layout, double M, double k);

/// Mirror image of the chain: b_i = a_{N_L} - a_{N_L - i}. Used to decide
/// detectability through stabilizability of the reversed transport.
ChainLayout reversed_chain(const ChainLayout& layout);

}  // namespace tchain
