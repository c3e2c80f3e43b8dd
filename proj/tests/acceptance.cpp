// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include <Eigen/SparseLU>

#include "tchain/experiments.hpp"
#include "tchain/feedback.hpp"
#include "tchain/mild.hpp"
#include "tchain/norms.hpp"
#include "tchain/ocp.hpp"
#include "tchain/stabilizability.hpp"

using namespace tchain;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

PiecewiseField split(const ChainLayout& layout, const StateField& f) {
  return PiecewiseField::from_field(ChainPartition(layout, f.grid), f);
}

std::vector<double> time_grid(double step, double T) {
  const auto n = static_cast<Index>(std::llround(T / step));
  std::vector<double> t;
  for (Index k = 0; k <= n; ++k) t.push_back(step * static_cast<double>(k));
  return t;
}

Outcome criterion_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> gap(0.1, 10.0);
  int disagreements = 0, checks = 0;
  for (int layout = 0; layout < 100; ++layout) {
    std::vector<double> pts{0.0};
    for (int i = 0; i < 50; ++i) pts.push_back(pts.back() + gap(rng));
    const double longest = longest_free_interval_scan(pts, 50);
    for (double L0 : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      ++checks;
      if (gap_criterion(pts, 50, L0).stabilizable != (longest <= L0)) ++disagreements;
    }
  }
  return {disagreements == 0, fmt("%d disagreements in %d checks", disagreements, checks)};
}

Outcome criterion_certificate() {
  const double c = 2.0, k = 2.0, M = std::exp(2.0), h = 1e-3, tau = h / c;
  const auto layout = midpoint_chain(20, c);
  const Certificate cert = worst_case_certificate(0.1, layout, M, k);
  const auto grid = SpatialGrid::aligned(layout, h);
  const double mid = 0.5 * (cert.support.lo + cert.support.hi);
  const StateField x0_field = bump_initial(mid, cert.support.length(), grid);
  const auto x0 = split(layout, x0_field);
  const double initial = l2(x0);
  const double bound = M * std::exp(-k * cert.t_star) * initial;
  const Interval window{cert.support.lo + c * cert.t_star, cert.support.hi + c * cert.t_star};

  const auto steps = static_cast<Index>(std::llround(cert.t_star / tau)) + 1;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> bounded(-1.0, 1.0);
  Eigen::MatrixXd random(steps + 1, 2);
  for (Index i = 0; i <= steps; ++i)
    for (Index p = 0; p < 2; ++p) random(i, p) = (i == 0) ? 0.0 : bounded(rng);

  std::vector<std::pair<const char*, PiecewiseField>> candidates;
  candidates.emplace_back(
      "zero", dirichlet_solution({layout, x0, Coupling::Dirichlet, ControlSignal::zero(tau, steps, 2)}, cert.t_star));
  const std::vector<double> at{cert.t_star};
  candidates.emplace_back("feedback", dirichlet_closed_loop(layout, x0, at).trajectory.states.front());
  candidates.emplace_back(
      "random", dirichlet_solution({layout, x0, Coupling::Dirichlet, ControlSignal(tau, random)}, cert.t_star));

  bool pass = cert.envelope_factor < 1.0;
  double worst_window = 0.0, smallest_full = INFINITY;
  for (const auto& [name, state] : candidates) {
    const double window_norm = l2(state.to_field(), window);
    const double full = l2(state);
    worst_window = std::max(worst_window, std::abs(window_norm - initial));
    smallest_full = std::min(smallest_full, full);
    pass = pass && std::abs(window_norm - initial) <= 1e-10 && full > bound;
  }
  return {pass, fmt("L0 = %g, t* = %g, M e^{-k t*} = %.4f, max |window norm - |x0|| = %.1e, "
                    "min |x(t*)| / |x0| = %.4f",
                    cert.L0_target, cert.t_star, cert.envelope_factor, worst_window, smallest_full / initial)};
}

Outcome criterion_extinction() {
  const double c = 2.0, h = 1e-3, tau = h / c;
  const auto layout = equidistant_chain(1.0, 10.0, c);
  const auto grid = SpatialGrid::aligned(layout, h);
  const auto x0 = split(layout, bump_initial(0.6, 0.8, grid));
  const double initial = l2(x0);
  const double extinction = 2.0 * layout.max_gap() / c;
  const auto times = time_grid(tau, 2.0);
  double before = 0.0, after = 0.0;
  for (std::size_t start = 0; start < times.size(); start += 500) {
    const std::span<const double> chunk(times.data() + start, std::min<std::size_t>(500, times.size() - start));
    const auto run = dirichlet_closed_loop(layout, x0, chunk);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const double ratio = l2(run.trajectory.states[i]) / initial;
      if (chunk[i] >= extinction + tau - 1e-12) after = std::max(after, ratio);
      else before = std::max(before, ratio);
    }
  }
  return {after <= 1e-10 && before <= 1.0,
          fmt("%zu times, max |x(t)|/|x0| = %.6f for t < 1 + tau, %.1e afterwards", times.size(), before, after)};
}

Outcome criterion_neumann() {
  const double c = 2.0, h = 1e-3;
  const auto layout = equidistant_chain(1.0, 10.0, c);
  const double dt = layout.min_gap() / c;

  // zero-forcing boundary ODE against the piecewise exponential bound
  const double step = h / c;
  const Index n = static_cast<Index>(std::llround(5.0 / step));
  const Vector y = neumann_boundary_ode(Vector::Zero(n + 1), 1.0, step, c, dt);
  double excess = 0.0;
  for (Index i = 0; i <= n; ++i) {
    const double t = step * static_cast<double>(i);
    excess = std::max(excess, std::abs(y(i)) - std::exp(c * dt / 2.0 - c * t));
  }

  // per-subdomain H1 envelope of the closed loop, own-subdomain reference
  const auto grid = SpatialGrid::aligned(layout, h);
  StateField x0 = bump_initial(0.6, 0.8, grid);
  x0.values.array() += 1.0;
  const auto run = neumann_closed_loop(layout, split(layout, x0), time_grid(0.005, 5.0));
  const auto constants = neumann_constants(layout.max_gap(), layout.min_gap(), c);
  const auto report = subdomain_envelope_check(run, constants.M, constants.k, SubdomainReference::Own);
  return {excess <= 1e-9 && report.pass,
          fmt("ODE bound excess %.1e; H1 envelope M = %.3f, k = %g, max ratio %.4f (tolerance %.4f) at "
              "subdomain %ld, t = %g",
              excess, constants.M, constants.k, report.max_ratio, report.tolerance,
              static_cast<long>(report.worst_subdomain), report.worst_time)};
}

Outcome criterion_oracle() {
  const double c = 2.0, h = 1e-3, tau = h / c, T = 2.0;
  const auto layout = equidistant_chain(1.0, 10.0, c);
  const auto grid = SpatialGrid::aligned(layout, h);
  const auto x0 = split(layout, bump_initial(0.6, 0.8, grid));
  const auto steps = static_cast<Index>(std::llround(T / tau));
  Eigen::MatrixXd smooth(steps + 1, layout.num_subdomains());
  for (Index i = 0; i <= steps; ++i)
    for (Index p = 0; p < smooth.cols(); ++p)
      smooth(i, p) = std::sin(M_PI * tau * static_cast<double>(i)) * (1.0 + 0.1 * static_cast<double>(p));

  double worst = 0.0;
  for (const ControlSignal& u : {ControlSignal::zero(tau, steps, layout.num_subdomains()), ControlSignal(tau, smooth)}) {
    const OpenLoopProblem problem{layout, x0, Coupling::Dirichlet, u};
    const auto reference = upwind_reference(problem, T, 1.0, steps / 10);
    DirichletTraceback traceback(layout, x0, [&u](Index p, double s, double up) { return up + u(p, s); });
    for (std::size_t i = 1; i < reference.size(); ++i) {
      const Vector mild = traceback.sample(reference.times[i]).stacked();
      const Vector diff = mild - reference.states[i].stacked();
      const auto part = x0.partition();
      const double err = l2(PiecewiseField::unstack(part, diff)) /
                         std::max(l2(PiecewiseField::unstack(part, mild)), 1e-300);
      if (l2(PiecewiseField::unstack(part, mild)) > 0.0) worst = std::max(worst, err);
    }
  }
  return {worst <= 5e-2, fmt("max relative L2 error %.2e over zero and smooth controls", worst)};
}

Outcome criterion_ocp() {
  const auto layout = equidistant_chain(1.0, 10.0, 2.0);
  const auto grid = SpatialGrid::aligned(layout, 0.02);
  const auto config = make_ocp_config(layout, bump_initial(0.6, 0.8, grid), 5.0, 0.156);
  const OcpSolution solution = solve(config);

  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  auto random = [&] {
    Eigen::MatrixXd m(config.steps() + 1, layout.num_subdomains());
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    m.row(0).setZero();
    return m;
  };
  const ControlSignal u(config.tau, random());
  const ControlSignal gradient = reduced_gradient(config, u);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd d = random();
    const double eps = 1e-3;
    const double fd = (ocp_cost(config, ControlSignal(config.tau, u.values() + eps * d)) -
                       ocp_cost(config, ControlSignal(config.tau, u.values() - eps * d))) / (2.0 * eps);
    const double exact = (gradient.values().array() * d.array()).sum();
    worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
  }
  return {solution.residual <= 1e-8 && worst <= 1e-5,
          fmt("KKT residual %.2e, cost %.6f, max relative FD error %.2e", solution.residual, solution.cost, worst)};
}

Outcome criterion_sweep() {
  ExperimentSpec spec;
  spec.h = 0.02;
  spec.mu = 0.5;
  spec.T = 5.0;
  spec.alpha = 0.156;
  spec.jobs = 1;
  const auto points = sweep_points(spec);
  const auto cls = classify_sweep(points);
  std::string values;
  for (const auto& p : points)
    values += fmt(" %s(%g)=%.4f", std::string(to_string(p.scenario)).c_str(), p.L, p.state_norm);
  return {cls.plateau && cls.growth,
          fmt("plateau ratio %.4f, midpoint growth ratio %.3f, increasing %s;", cls.plateau_ratio,
              cls.growth_ratio, cls.increasing ? "yes" : "no") + values};
}

Outcome criterion_invariants() {
  const Index n = 400;
  const double h = 0.025, tau = 0.0125, c = 2.0;
  auto [lhs, rhs] = midpoint_operators(periodic_difference_matrix(n, h), tau, c);
  Eigen::SparseLU<SparseMatrix> lu(lhs);
  Vector x(n);
  for (Index j = 0; j < n; ++j) x(j) = std::exp(-std::pow(h * j - 5.0, 2)) + 0.3 * std::sin(4.0 * M_PI * j / n);
  const double energy = x.squaredNorm();
  double drift = 0.0;
  for (int k = 0; k < 800; ++k) {
    x = lu.solve(rhs * x);
    drift = std::max(drift, std::abs(x.squaredNorm() - energy) / energy);
  }

  const auto layout = build_chain({0, 1.5, 4, 5, 8}, 8, c);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  Vector v(grid.size());
  for (Index j = 0; j < grid.size(); ++j) v(j) = std::sin(1.3 * grid.node(j)) + 0.5;
  const auto x0 = split(layout, StateField(grid, v));
  double semigroup = 0.0;
  for (Coupling bc : {Coupling::Dirichlet, Coupling::Neumann})
    for (auto [s, t] : {std::pair{0.37, 0.81}, std::pair{1.2, 2.005}, std::pair{0.005, 3.0}}) {
      const auto a = autonomous_solution(layout, autonomous_solution(layout, x0, s, bc), t, bc);
      const auto b = autonomous_solution(layout, x0, s + t, bc);
      semigroup = std::max(semigroup, (a.stacked() - b.stacked()).cwiseAbs().maxCoeff());
    }
  return {drift <= 1e-12 && semigroup <= 1e-12,
          fmt("relative energy drift %.1e over 800 steps, semigroup defect %.1e", drift, semigroup)};
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, 1.0, criterion_equivalence}, {2, 1.0, criterion_certificate}, {3, 10.0, criterion_extinction},
      {4, 30.0, criterion_neumann},    {5, 30.0, criterion_oracle},     {6, 120.0, criterion_ocp},
      {7, 600.0, criterion_sweep},     {8, 1.0, criterion_invariants},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = outcome.pass && seconds < c.limit_s;
    all = all && pass;
    std::printf("criterion %d: %s  %s [%.2f s, limit %g s]\n", c.number, pass ? "PASS" : "FAIL",
                outcome.detail.c_str(), seconds, c.limit_s);
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
