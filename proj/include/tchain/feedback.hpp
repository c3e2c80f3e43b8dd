#pragma once

#include <span>

#include "tchain/core.hpp"

namespace tchain {

/// Continuous switch rising linearly from 0 to 1 on [0, dt/2]: 2t/dt there, 1 after.
/// Throws BadParam for t < 0 or dt <= 0.
double kappa(double t, double dt);

/// Closed form of int_0^t kappa.
double kappa_integral(double t, double dt);

/// Closed-loop trajectory together with the control that realized it. `control` has
/// one row per trajectory time and one column per subdomain.
struct ClosedLoopRun {
  ChainLayout layout;
  PiecewiseField x0;
  Coupling bc;
  Trajectory trajectory;
  Eigen::MatrixXd control;
  double dt;  // Delta / c
};

/// Dirichlet ramp feedback. Inflow at a_0 is (1 - kappa) x0(c t); inflow at a_p, p >= 1,
/// is (1 - kappa) x_{p-1}(a_p, t), i.e. u_p = -kappa x_{p-1}(a_p, t). The state vanishes
/// for t >= dt/2 + max gap / c. Throws BadInitialData, NegativeTime.
ClosedLoopRun dirichlet_closed_loop(const ChainLayout& layout, const PiecewiseField& x0,
                                    std::span<const double> times);

/// Boundary value of a Neumann-controlled subdomain under the ramp feedback,
///   y' = -c kappa y - c (1 - kappa) f,  y(0) = y0,
/// on the uniform grid t_n = n step. The homogeneous factor exp(-c int kappa) is exact;
/// the forcing convolution uses the trapezoid rule. Throws GridMismatch for empty
/// forcing, BadParam for non-positive step, c or dt.
Vector neumann_boundary_ode(const Vector& forcing, double y0, double step, double c,
                            double dt);

/// Neumann ramp feedback
///   u_0 = (1 - kappa) x0'(c t) + kappa x_0(0, t),
///   u_p = -kappa x_{p-1}'(a_p, t) + kappa x_p(a_p, t).
/// Predecessor derivatives follow from the closed-form boundary dynamics; initial
/// derivatives use difference quotients of x0. Throws BadInitialData, NegativeTime.
ClosedLoopRun neumann_closed_loop(const ChainLayout& layout, const PiecewiseField& x0,
                                  std::span<const double> times);

enum class NormKind { L2, H1 };

struct EnvelopeReport {
  double max_ratio = 0.0;  // max_t |x(t)| / (M e^{-kt} |x0|)
  double worst_time = 0.0;
  double tolerance = 1.0;  // (1 + 1e-9)(1 + C h)
  bool pass = true;
  bool vacuous = false;  // |x0| = 0
};

/// Checks |x(t)| <= M e^{-k t} |x0| at every stored time, with multiplicative
/// discretization slack (1 + slack_c h).
EnvelopeReport envelope_check(const ClosedLoopRun& run, double M, double k, NormKind norm,
                              double slack_c = 10.0);

enum class SubdomainReference {
  Own,              // |x0|_{H^1(Omega_p)}
  WithPredecessor,  // |x0|_{H^1(Omega_{p-1} u Omega_p)}, the data x_p depends on
};

struct SubdomainEnvelopeReport {
  double max_ratio = 0.0;
  Index worst_subdomain = 0;
  double worst_time = 0.0;
  double tolerance = 1.0;
  bool pass = true;
};

/// Per-subdomain H^1 envelope |x_p(t)|_{H^1} <= M e^{-kt} |x0|_{ref}. A zero
/// reference norm with a nonzero state counts as an infinite ratio.
SubdomainEnvelopeReport subdomain_envelope_check(const ClosedLoopRun& run, double M, double k,
                                                 SubdomainReference reference,
                                                 double slack_c = 10.0);

}  // namespace tchain
