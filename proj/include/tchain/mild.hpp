#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tchain/core.hpp"

namespace tchain {

/// Open-loop chain: initial data, coupling type and one control channel per
/// subdomain. For Neumann coupling the channels are the u_p of
///   d/dw x_p(a_p) = d/dw x_{p-1}(a_p) + u_p.
struct OpenLoopProblem {
  ChainLayout layout;
  PiecewiseField x0;
  Coupling bc = Coupling::Dirichlet;
  ControlSignal control;

  /// Throws GridMismatch when the channel count or the partition do not fit the layout.
  void validate() const;
};

/// Samples the characteristic representation at time t: in subdomain p, nodes with
/// w - a_p <= c t take inflow(p, t - (w - a_p)/c), all others the initial data
/// transported by c t. Returns x0 at t = 0.
PiecewiseField sample_characteristics(const ChainLayout& layout, const PiecewiseField& x0,
                                      double t,
                                      const std::function<double(Index, double)>& inflow);

/// Recursive trace-back for Dirichlet coupling. The inflow at a_p is
/// law(p, s, trace of subdomain p-1 at a_p), with the trace of the missing subdomain -1
/// taken as 0. Inflow values on the time grid s = n h / c are memoized per
/// (p, n), so results do not depend on evaluation order. Not thread-safe; use one
/// instance per thread.
class DirichletTraceback {
 public:
  using Law = std::function<double(Index p, double s, double upstream)>;

  DirichletTraceback(ChainLayout layout, PiecewiseField x0, Law law);

  /// Inflow value x_p(a_p^+, s).
  double inflow(Index p, double s);
  /// Value of subdomain p at its right end, x_p(a_{p+1}^-, s).
  double trace(Index p, double s);
  PiecewiseField sample(double t);

  const ChainLayout& layout() const { return layout_; }
  const PiecewiseField& initial() const { return x0_; }

 private:
  ChainLayout layout_;
  PiecewiseField x0_;
  Law law_;
  double memo_step_;
  std::vector<std::vector<double>> memo_;
};

/// Dirichlet: zero inflow. Neumann: each subdomain keeps its left boundary value.
/// Throws NegativeTime.
PiecewiseField autonomous_solution(const ChainLayout& layout, const PiecewiseField& x0,
                                   double t, Coupling bc);

/// Dirichlet inflow x_{p-1}(a_p, s) + u_p(s); control interpolated linearly between
/// samples. Throws BcMismatch, NegativeTime.
PiecewiseField dirichlet_solution(const OpenLoopProblem& problem, double t);

/// Neumann solution through the Dirichlet-equivalent inflow
///   v_p(s) = x0_p(a_p) - c int_0^s (d/dw x_{p-1}(a_p, r) + u_p(r)) dr,
/// where the predecessor derivative is integrated in closed form along its own
/// solution formula. Throws BcMismatch, NegativeTime.
PiecewiseField neumann_solution(const OpenLoopProblem& problem, double t);

/// Transformed Neumann input v_p(s) of the formula above.
double neumann_transformed_input(const OpenLoopProblem& problem, Index p, double s);

/// Samples of the problem's solution (either coupling) at the given times.
Trajectory solve_open_loop(const OpenLoopProblem& problem, std::span<const double> times);

/// Union of the half-open intervals (a_p, a_p + c t] clipped to (0, L), merged.
/// Entries are (lo, hi] pairs.
std::vector<Interval> controlled_support(const ChainLayout& layout, double t);

/// First-order upwind reference for the open-loop chain with Courant number
/// c tau / h <= 1. Dirichlet inflow nodes are set from the updated predecessor;
/// Neumann inflow nodes integrate dy/dt = -c (backward difference of the
/// predecessor + u_p). Returns states at every multiple of `output_every` steps and at T.
Trajectory upwind_reference(const OpenLoopProblem& problem, double T, double courant = 1.0,
                            Index output_every = 1);

}  // namespace tchain
