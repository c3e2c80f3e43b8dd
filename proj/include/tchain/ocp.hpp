#pragma once

#include <Eigen/Sparse>

#include "tchain/core.hpp"

namespace tchain {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Linear-quadratic problem
///   min  1/2 int_0^T |x|^2 dt + alpha/2 int_0^T sum_p u_p^2 dt
/// subject to the Dirichlet-coupled chain on the layout.
struct OcpConfig {
  ChainLayout layout;
  StateField x0;
  double T = 5.0;
  double alpha = 0.156;
  double h = 0.01;
  double tau = 0.005;  // h / c by default

  Index steps() const;  // T / tau, throws BadParam unless integral
  void validate() const;
};

OcpConfig make_ocp_config(ChainLayout layout, StateField x0, double T, double alpha,
                          std::optional<double> tau = std::nullopt);

/// One implicit-midpoint step on the stacked piecewise state:
///   lhs x_{k+1} = rhs x_k + control u_{k+1}.
/// Rows of inner and outflow nodes read (I +- (tau c / 2) D_h) with the symmetric
/// quotient inside and a second-order one-sided quotient at the outflow node. The
/// first row of each subdomain is the transmission condition
///   x_p(a_p^+) - x_{p-1}(a_p^-) = u_p  (upstream value 0 for p = 0)
/// imposed at the new time level.
struct OneStepMap {
  ChainPartition partition;
  SparseMatrix lhs;
  SparseMatrix rhs;
  SparseMatrix control;  // state_size x channels
  Vector weights;        // trapezoid weights of the stacked state
};

/// Throws GridMisaligned.
OneStepMap discretize_dynamics(const OcpConfig& config);

/// Transport derivative matrix D_h on the stacked state; transmission rows are zero.
SparseMatrix chain_difference_matrix(const ChainPartition& partition);

/// Periodic symmetric difference quotient on n nodes (skew-symmetric), for tests of
/// the time integrator.
SparseMatrix periodic_difference_matrix(Index n, double h);

/// I + (tau c / 2) D and I - (tau c / 2) D.
std::pair<SparseMatrix, SparseMatrix> midpoint_operators(const SparseMatrix& difference,
                                                         double tau, double c);

/// Saddle-point system of the discrete problem. Unknowns are ordered by time level
/// k = 1..K as [x_k, u_k, lambda_k]:
///   Q_k x_k + lhs^T lambda_k - rhs^T lambda_{k+1} = 0
///   alpha tau u_k - control^T lambda_k            = 0
///   lhs x_k - control u_k - rhs x_{k-1}           = (k == 1 ? rhs x_0 : 0)
/// with Q_k = tau W (tau W / 2 at k = K).
struct KktSystem {
  SparseMatrix matrix;
  Vector rhs;
  Index steps = 0;
  Index state_size = 0;
  Index channels = 0;

  Index block_size() const { return 2 * state_size + channels; }
  Index state_offset(Index k) const { return (k - 1) * block_size(); }
  Index control_offset(Index k) const { return state_offset(k) + state_size; }
  Index adjoint_offset(Index k) const { return control_offset(k) + channels; }
};

/// Upper bound on KKT unknowns accepted before OutOfMemory is raised.
inline constexpr Index kMaxKktUnknowns = 20'000'000;

KktSystem assemble_kkt(const OcpConfig& config);

struct OcpSolution {
  Trajectory state;    // t_0 .. t_K
  Trajectory costate;  // lambda_k / (tau w_j); transmission nodes copy their neighbour
  ControlSignal control;  // row k is the jump x_p(a_p^+) - x_{p-1}(a_p^-) at t_k
  double cost = 0.0;
  double residual = 0.0;  // |K z - b|_2
};

/// Sparse LU solve of the KKT system. Throws SingularSystem, OutOfMemory.
OcpSolution solve(const OcpConfig& config);

/// Discrete cost of the control rows 1..K (row 0 is ignored).
double ocp_cost(const OcpConfig& config, const ControlSignal& control);

/// Gradient of ocp_cost with respect to rows 1..K by one forward and one adjoint
/// sweep; row 0 of the result is zero.
ControlSignal reduced_gradient(const OcpConfig& config, const ControlSignal& control);

}  // namespace tchain
