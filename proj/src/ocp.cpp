#include "tchain/ocp.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/SparseLU>

namespace tchain {

namespace {

using Triplet = Eigen::Triplet<double>;

std::vector<Index> piece_offsets(const ChainPartition& partition) {
  std::vector<Index> offsets{0};
  for (Index p = 0; p < partition.num_pieces(); ++p)
    offsets.push_back(offsets.back() + partition.piece_size(p));
  return offsets;
}

SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

Vector initial_jumps(const PiecewiseField& x0) {
  Vector jumps(x0.num_pieces());
  for (Index p = 0; p < x0.num_pieces(); ++p) {
    const double upstream = (p > 0) ? x0.piece(p - 1)(x0.piece(p - 1).size() - 1) : 0.0;
    jumps(p) = x0.piece(p)(0) - upstream;
  }
  return jumps;
}

template <typename Solver>
void factorize(Solver& solver, const SparseMatrix& m, const char* what) {
  solver.analyzePattern(m);
  solver.factorize(m);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << what << " factorization failed: " << solver.lastErrorMessage();
    throw Error(Errc::SingularSystem, msg.str());
  }
}

// forward and adjoint sweeps through the one-step map
class Sweeper {
 public:
  explicit Sweeper(const OcpConfig& config)
      : config_(config), map_(discretize_dynamics(config)), lhs_t_(map_.lhs.transpose()) {
    factorize(lu_, map_.lhs, "one-step");
    factorize(lu_t_, lhs_t_, "transposed one-step");
    x0_ = PiecewiseField::from_field(map_.partition, config.x0).stacked();
  }

  const OneStepMap& map() const { return map_; }
  const Vector& x0() const { return x0_; }

  std::vector<Vector> forward(const ControlSignal& u) const {
    const Index K = config_.steps();
    check_control(u);
    std::vector<Vector> x{x0_};
    for (Index k = 1; k <= K; ++k) {
      const Vector input = u.values().row(k).transpose();
      x.push_back(lu_.solve(map_.rhs * x.back() + map_.control * input));
    }
    return x;
  }

  double state_weight(Index k) const {
    const Index K = config_.steps();
    return (k == 0 || k == K) ? 0.5 * config_.tau : config_.tau;
  }

  double cost(const std::vector<Vector>& x, const ControlSignal& u) const {
    double state = 0.0;
    for (Index k = 0; k < static_cast<Index>(x.size()); ++k)
      state += state_weight(k) * x[k].cwiseAbs2().dot(map_.weights);
    const double control = config_.tau * u.values().bottomRows(u.steps()).squaredNorm();
    return 0.5 * state + 0.5 * config_.alpha * control;
  }

  // lambda_1 .. lambda_K (index 0 holds lambda_0 from the initial-level row)
  std::vector<Vector> adjoint(const std::vector<Vector>& x) const {
    const Index K = config_.steps();
    std::vector<Vector> lambda(static_cast<std::size_t>(K + 1));
    lambda[K] = lu_t_.solve(Vector(-state_weight(K) * x[K].cwiseProduct(map_.weights)));
    for (Index k = K - 1; k >= 0; --k) {
      const Vector rhs =
          map_.rhs.transpose() * lambda[k + 1] - state_weight(k) * x[k].cwiseProduct(map_.weights);
      lambda[k] = lu_t_.solve(rhs);
    }
    return lambda;
  }

  void check_control(const ControlSignal& u) const {
    if (u.steps() != config_.steps() || u.channels() != config_.layout.num_subdomains())
      throw Error(Errc::GridMismatch, "control does not match the time grid and channels");
  }

 private:
  const OcpConfig& config_;
  OneStepMap map_;
  SparseMatrix lhs_t_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_t_;
  Vector x0_;
};

}  // namespace

Index OcpConfig::steps() const {
  if (!(tau > 0.0) || !(T > 0.0)) throw Error(Errc::BadParam, "T and tau must be > 0");
  const double n = std::round(T / tau);
  if (n < 1.0 || std::abs(n * tau - T) > 1e-9 * T)
    throw Error(Errc::BadParam, "T must be an integer multiple of tau");
  return static_cast<Index>(n);
}

void OcpConfig::validate() const {
  if (!(alpha > 0.0)) throw Error(Errc::BadParam, "alpha must be > 0");
  steps();
  const SpatialGrid grid = SpatialGrid::aligned(layout, h);
  if (!(grid == x0.grid)) throw Error(Errc::GridMismatch, "x0 grid differs from (L, h)");
}

OcpConfig make_ocp_config(ChainLayout layout, StateField x0, double T, double alpha,
                          std::optional<double> tau) {
  const double h = x0.grid.spacing();
  const double step = tau ? *tau : h / layout.velocity();
  OcpConfig config{std::move(layout), std::move(x0), T, alpha, h, step};
  config.validate();
  return config;
}

SparseMatrix chain_difference_matrix(const ChainPartition& partition) {
  const double h = partition.grid.spacing();
  const auto offsets = piece_offsets(partition);
  std::vector<Triplet> triplets;
  for (Index p = 0; p < partition.num_pieces(); ++p) {
    const Index base = offsets[p];
    const Index m = partition.piece_size(p) - 1;
    for (Index j = 1; j < m; ++j) {
      triplets.emplace_back(base + j, base + j + 1, 0.5 / h);
      triplets.emplace_back(base + j, base + j - 1, -0.5 / h);
    }
    if (m >= 2) {
      triplets.emplace_back(base + m, base + m, 1.5 / h);
      triplets.emplace_back(base + m, base + m - 1, -2.0 / h);
      triplets.emplace_back(base + m, base + m - 2, 0.5 / h);
    } else {
      triplets.emplace_back(base + m, base + m, 1.0 / h);
      triplets.emplace_back(base + m, base + m - 1, -1.0 / h);
    }
  }
  const Index n = offsets.back();
  return from_triplets(n, n, triplets);
}

SparseMatrix periodic_difference_matrix(Index n, double h) {
  std::vector<Triplet> triplets;
  for (Index j = 0; j < n; ++j) {
    triplets.emplace_back(j, (j + 1) % n, 0.5 / h);
    triplets.emplace_back(j, (j + n - 1) % n, -0.5 / h);
  }
  return from_triplets(n, n, triplets);
}

std::pair<SparseMatrix, SparseMatrix> midpoint_operators(const SparseMatrix& difference,
                                                         double tau, double c) {
  SparseMatrix identity(difference.rows(), difference.cols());
  identity.setIdentity();
  const double a = 0.5 * tau * c;
  SparseMatrix lhs = identity + a * difference;
  SparseMatrix rhs = identity - a * difference;
  lhs.makeCompressed();
  rhs.makeCompressed();
  return {std::move(lhs), std::move(rhs)};
}

OneStepMap discretize_dynamics(const OcpConfig& config) {
  const SpatialGrid grid = SpatialGrid::aligned(config.layout, config.h);
  ChainPartition partition(config.layout, grid);
  const auto offsets = piece_offsets(partition);
  const Index n = offsets.back();
  auto [lhs, rhs] = midpoint_operators(chain_difference_matrix(partition), config.tau,
                                       config.layout.velocity());

  // transmission rows replace the first row of every subdomain
  std::vector<Triplet> lhs_t;
  std::vector<Triplet> rhs_t;
  std::vector<bool> inflow(static_cast<std::size_t>(n), false);
  for (Index p = 0; p < partition.num_pieces(); ++p) inflow[offsets[p]] = true;
  for (Index col = 0; col < n; ++col) {
    for (SparseMatrix::InnerIterator it(lhs, col); it; ++it)
      if (!inflow[it.row()]) lhs_t.emplace_back(it.row(), it.col(), it.value());
    for (SparseMatrix::InnerIterator it(rhs, col); it; ++it)
      if (!inflow[it.row()]) rhs_t.emplace_back(it.row(), it.col(), it.value());
  }
  std::vector<Triplet> control_t;
  for (Index p = 0; p < partition.num_pieces(); ++p) {
    lhs_t.emplace_back(offsets[p], offsets[p], 1.0);
    if (p > 0) lhs_t.emplace_back(offsets[p], offsets[p] - 1, -1.0);
    control_t.emplace_back(offsets[p], p, 1.0);
  }

  Vector weights = Vector::Constant(n, grid.spacing());
  for (Index p = 0; p < partition.num_pieces(); ++p) {
    weights(offsets[p]) *= 0.5;
    weights(offsets[p + 1] - 1) *= 0.5;
  }
  return OneStepMap{partition, from_triplets(n, n, lhs_t), from_triplets(n, n, rhs_t),
                    from_triplets(n, partition.num_pieces(), control_t), std::move(weights)};
}

KktSystem assemble_kkt(const OcpConfig& config) {
  config.validate();
  const OneStepMap map = discretize_dynamics(config);
  KktSystem kkt;
  kkt.steps = config.steps();
  kkt.state_size = map.lhs.rows();
  kkt.channels = map.control.cols();
  const Index unknowns = kkt.steps * kkt.block_size();
  if (unknowns > kMaxKktUnknowns) {
    std::ostringstream msg;
    msg << unknowns << " KKT unknowns exceed the budget of " << kMaxKktUnknowns;
    throw Error(Errc::OutOfMemory, msg.str());
  }

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(kkt.steps * (4 * map.lhs.nonZeros() + 2 * map.rhs.nonZeros() +
                                                  kkt.state_size + 3 * kkt.channels)));
  auto add_block = [&t](Index row0, Index col0, const SparseMatrix& block, double scale,
                        bool transpose) {
    for (Index col = 0; col < block.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(block, col); it; ++it) {
        const Index r = transpose ? it.col() : it.row();
        const Index c = transpose ? it.row() : it.col();
        t.emplace_back(row0 + r, col0 + c, scale * it.value());
      }
  };

  const double tau = config.tau;
  for (Index k = 1; k <= kkt.steps; ++k) {
    const Index xs = kkt.state_offset(k);
    const Index us = kkt.control_offset(k);
    const Index ls = kkt.adjoint_offset(k);
    const double w = (k == kkt.steps) ? 0.5 * tau : tau;
    for (Index j = 0; j < kkt.state_size; ++j) t.emplace_back(xs + j, xs + j, w * map.weights(j));
    for (Index p = 0; p < kkt.channels; ++p) t.emplace_back(us + p, us + p, config.alpha * tau);
    // x_k rows: lhs^T lambda_k - rhs^T lambda_{k+1}
    add_block(xs, ls, map.lhs, 1.0, true);
    if (k < kkt.steps) add_block(xs, kkt.adjoint_offset(k + 1), map.rhs, -1.0, true);
    // u_k rows: -control^T lambda_k
    add_block(us, ls, map.control, -1.0, true);
    // lambda_k rows: lhs x_k - control u_k - rhs x_{k-1}
    add_block(ls, xs, map.lhs, 1.0, false);
    add_block(ls, us, map.control, -1.0, false);
    if (k > 1) add_block(ls, kkt.state_offset(k - 1), map.rhs, -1.0, false);
  }
  kkt.matrix = from_triplets(unknowns, unknowns, t);
  kkt.rhs = Vector::Zero(unknowns);
  const Vector x0 = PiecewiseField::from_field(map.partition, config.x0).stacked();
  kkt.rhs.segment(kkt.adjoint_offset(1), kkt.state_size) = map.rhs * x0;
  return kkt;
}

OcpSolution solve(const OcpConfig& config) {
  const KktSystem kkt = assemble_kkt(config);
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  factorize(lu, kkt.matrix, "KKT");
  const Vector z = lu.solve(kkt.rhs);
  if (!z.allFinite()) throw Error(Errc::SingularSystem, "KKT solve produced non-finite values");

  const Sweeper sweeper(config);
  const OneStepMap& map = sweeper.map();
  const ChainPartition& partition = map.partition;
  const Index K = kkt.steps;
  const double tau = config.tau;

  OcpSolution out;
  out.residual = (kkt.matrix * z - kkt.rhs).norm();

  Eigen::MatrixXd u(K + 1, kkt.channels);
  u.row(0) = initial_jumps(PiecewiseField::from_field(partition, config.x0)).transpose();
  std::vector<Vector> x{sweeper.x0()};
  std::vector<Vector> lambda(static_cast<std::size_t>(K + 1));
  for (Index k = 1; k <= K; ++k) {
    x.push_back(z.segment(kkt.state_offset(k), kkt.state_size));
    u.row(k) = z.segment(kkt.control_offset(k), kkt.channels).transpose();
    lambda[k] = z.segment(kkt.adjoint_offset(k), kkt.state_size);
  }
  // multiplier of the initial level from its stationarity row
  {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_t;
    const SparseMatrix lhs_t = map.lhs.transpose();
    factorize(lu_t, lhs_t, "transposed one-step");
    const Vector rhs = map.rhs.transpose() * lambda[1] - 0.5 * tau * x[0].cwiseProduct(map.weights);
    lambda[0] = lu_t.solve(rhs);
  }
  out.control = ControlSignal(tau, std::move(u));
  out.cost = sweeper.cost(x, out.control);

  std::vector<bool> inflow(static_cast<std::size_t>(kkt.state_size), false);
  {
    Index offset = 0;
    for (Index p = 0; p < partition.num_pieces(); ++p) {
      inflow[offset] = true;
      offset += partition.piece_size(p);
    }
  }
  for (Index k = 0; k <= K; ++k) {
    const double t = tau * static_cast<double>(k);
    out.state.times.push_back(t);
    out.state.states.push_back(PiecewiseField::unstack(partition, x[k]));
    Vector costate = lambda[k].cwiseQuotient(map.weights) / tau;
    for (Index j = 0; j < kkt.state_size; ++j)
      if (inflow[j]) costate(j) = costate(j + 1);
    out.costate.times.push_back(t);
    out.costate.states.push_back(PiecewiseField::unstack(partition, costate));
  }
  return out;
}

double ocp_cost(const OcpConfig& config, const ControlSignal& control) {
  config.validate();
  const Sweeper sweeper(config);
  return sweeper.cost(sweeper.forward(control), control);
}

ControlSignal reduced_gradient(const OcpConfig& config, const ControlSignal& control) {
  config.validate();
  const Sweeper sweeper(config);
  const auto x = sweeper.forward(control);
  const auto lambda = sweeper.adjoint(x);
  const OneStepMap& map = sweeper.map();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(control.steps() + 1, control.channels());
  for (Index k = 1; k <= control.steps(); ++k) {
    grad.row(k) = config.alpha * config.tau * control.values().row(k) -
                  (map.control.transpose() * lambda[k]).transpose();
  }
  return ControlSignal(config.tau, std::move(grad));
}

}  // namespace tchain
