#include <doctest.h>

#include <cmath>

#include "tchain/feedback.hpp"
#include "tchain/mild.hpp"
#include "tchain/norms.hpp"
#include "tchain/stabilizability.hpp"

using namespace tchain;

namespace {

PiecewiseField split(const ChainLayout& layout, const StateField& f) {
  return PiecewiseField::from_field(ChainPartition(layout, f.grid), f);
}

std::vector<double> time_grid(double step, Index count) {
  std::vector<double> t(static_cast<std::size_t>(count + 1));
  for (Index k = 0; k <= count; ++k) t[k] = step * static_cast<double>(k);
  return t;
}

double max_abs(const PiecewiseField& f) { return f.stacked().cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("ramp") {
  CHECK(kappa(0.0, 0.5) == 0.0);
  CHECK(kappa(0.125, 0.5) == doctest::Approx(0.5));
  CHECK(kappa(0.25, 0.5) == 1.0);
  CHECK(kappa(3.0, 0.5) == 1.0);
  CHECK_THROWS_AS(kappa(-0.1, 0.5), Error);
  CHECK_THROWS_AS(kappa(0.1, 0.0), Error);
  // closed-form integral against a fine trapezoid sum
  for (double t : {0.1, 0.25, 0.9}) {
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += 0.5 * (t / n) * (kappa(t * i / n, 0.5) + kappa(t * (i + 1) / n, 0.5));
    CHECK(kappa_integral(t, 0.5) == doctest::Approx(sum).epsilon(1e-9));
  }
}

TEST_CASE("dirichlet feedback extinguishes the equidistant chain") {
  const auto layout = equidistant_chain(1, 10, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  const auto x0 = split(layout, bump_initial(0.6, 0.8, grid));
  const auto times = time_grid(0.005, 400);
  const auto run = dirichlet_closed_loop(layout, x0, times);
  const double initial = l2(x0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double n = l2(run.trajectory.states[k]);
    if (times[k] >= 1.0) CHECK(n <= 1e-10 * initial);
    else CHECK(n <= initial * (1.0 + 1e-12));
  }
  const auto M = dirichlet_constants(layout.max_gap(), 1.0, 2.0).M;
  const auto report = envelope_check(run, M, 1.0, NormKind::L2);
  CHECK(report.pass);
  CHECK_FALSE(report.vacuous);
  // an envelope that decays faster than the chain empties must fail
  CHECK_FALSE(envelope_check(run, 1.0, 50.0, NormKind::L2).pass);
}

TEST_CASE("zero initial value stays zero") {
  const auto layout = equidistant_chain(1, 4, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.05);
  const auto x0 = PiecewiseField::zero(ChainPartition(layout, grid));
  const auto times = time_grid(0.025, 80);
  const auto dir = dirichlet_closed_loop(layout, x0, times);
  const auto neu = neumann_closed_loop(layout, x0, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    CHECK(max_abs(dir.trajectory.states[k]) == 0.0);
    CHECK(max_abs(neu.trajectory.states[k]) == 0.0);
  }
  CHECK(dir.control.cwiseAbs().maxCoeff() == 0.0);
  CHECK(neu.control.cwiseAbs().maxCoeff() == 0.0);
  CHECK(envelope_check(dir, 2.0, 1.0, NormKind::L2).vacuous);
}

TEST_CASE("L2 norm can grow for data near the left end") {
  // the ramp reflects (1 - kappa) x0(c t) into subdomain 0 while the original mass is
  // still inside it
  const auto layout = equidistant_chain(1, 10, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.005);
  const auto x0 = split(layout, bump_initial(0.1, 0.2, grid));
  const auto run = dirichlet_closed_loop(layout, x0, time_grid(0.0025, 80));
  double worst = 0.0;
  for (const auto& s : run.trajectory.states) worst = std::max(worst, l2(s));
  CHECK(worst > 1.05 * l2(x0));
}

TEST_CASE("dirichlet closed loop equals the open loop driven by its own control") {
  const auto layout = build_chain({0, 1.5, 2.5, 5, 8}, 8, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  const auto x0 = split(layout, bump_initial(1.0, 1.6, grid));
  const double step = 0.005;
  const auto times = time_grid(step, 600);
  const auto run = dirichlet_closed_loop(layout, x0, times);
  const OpenLoopProblem open{layout, x0, Coupling::Dirichlet, ControlSignal(step, run.control)};
  for (std::size_t k = 0; k < times.size(); k += 37)
    CHECK((dirichlet_solution(open, times[k]).stacked() - run.trajectory.states[k].stacked())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
}

TEST_CASE("closed loop does not depend on the order of requested times") {
  const auto layout = equidistant_chain(1, 6, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  const auto x0 = split(layout, bump_initial(0.6, 0.8, grid));
  const std::vector<double> forward{0.3, 0.7, 1.1, 2.0};
  const std::vector<double> backward{2.0, 1.1, 0.7, 0.3};
  const auto a = dirichlet_closed_loop(layout, x0, forward);
  const auto b = dirichlet_closed_loop(layout, x0, backward);
  for (std::size_t k = 0; k < 4; ++k) CHECK(a.trajectory.states[k].stacked() == b.trajectory.states[3 - k].stacked());
  CHECK_THROWS_AS(dirichlet_closed_loop(layout, x0, std::vector<double>{-1.0}), Error);
}

TEST_CASE("ramp keeps the inflow continuous at t = 0") {
  const auto layout = equidistant_chain(1, 4, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  Vector v(grid.size());
  for (Index j = 0; j < grid.size(); ++j) v(j) = std::cos(grid.node(j));
  const auto x0 = split(layout, StateField(grid, v));
  const auto run = dirichlet_closed_loop(layout, x0, time_grid(0.005, 10));
  for (Index k = 1; k <= 10; ++k) {
    const double t = 0.005 * k;
    for (Index p = 0; p < 4; ++p)
      CHECK(std::abs(run.trajectory.states[k].piece(p)(0) - x0.piece(p)(0)) <= 10.0 * t);
  }
}

TEST_CASE("neumann boundary ODE") {
  const double c = 2.0, dt = 0.5;
  // no forcing: exact homogeneous factor
  const Vector zero = Vector::Zero(1001);
  const Vector y = neumann_boundary_ode(zero, 1.5, 0.001, c, dt);
  for (Index i = 0; i <= 1000; i += 50)
    CHECK(y(i) == doctest::Approx(1.5 * std::exp(-c * kappa_integral(0.001 * i, dt))).epsilon(1e-14));
  CHECK(neumann_boundary_ode(zero, 0.0, 0.001, c, dt).cwiseAbs().maxCoeff() == 0.0);
  // after the ramp the decay rate is exactly c
  CHECK(y(1000) / y(500) == doctest::Approx(std::exp(-c * 0.5)).epsilon(1e-12));

  // forced case against classical Runge-Kutta with a much smaller step
  auto forcing = [](double s) { return std::sin(3.0 * s) + 0.5; };
  Vector f(1001);
  for (Index i = 0; i <= 1000; ++i) f(i) = forcing(0.001 * i);
  const Vector yf = neumann_boundary_ode(f, 0.7, 0.001, c, dt);
  auto rhs = [&](double s, double v) { return -c * kappa(s, dt) * v - c * (1.0 - kappa(s, dt)) * forcing(s); };
  double v = 0.7, s = 0.0;
  const double hs = 1e-5;
  for (int i = 0; i < 100000; ++i) {
    const double k1 = rhs(s, v), k2 = rhs(s + hs / 2, v + hs / 2 * k1);
    const double k3 = rhs(s + hs / 2, v + hs / 2 * k2), k4 = rhs(s + hs, v + hs * k3);
    v += hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    s += hs;
  }
  CHECK(std::abs(yf(1000) - v) <= 1e-6);

  CHECK_THROWS_AS(neumann_boundary_ode(Vector(), 0.0, 0.1, c, dt), Error);
  CHECK_THROWS_AS(neumann_boundary_ode(zero, 0.0, 0.0, c, dt), Error);
}

TEST_CASE("neumann feedback on constant data decays at the boundary rate") {
  const auto layout = equidistant_chain(1, 4, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  const auto x0 = split(layout, StateField(grid, Vector::Constant(grid.size(), 2.0)));
  const auto run = neumann_closed_loop(layout, x0, std::vector<double>{0.1, 0.6, 1.5});
  const double c = 2.0, dt = 0.5;
  for (std::size_t k = 0; k < 3; ++k) {
    const double t = run.trajectory.times[k];
    for (Index p = 0; p < 4; ++p) {
      const Vector& piece = run.trajectory.states[k].piece(p);
      for (Index j = 0; j < piece.size(); ++j) {
        const double d = j * 0.01;
        const double expected = (d <= c * t + 1e-12) ? 2.0 * std::exp(-c * kappa_integral(t - d / c, dt)) : 2.0;
        CHECK(piece(j) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("neumann subdomains only see nearby initial data") {
  const auto layout = build_chain({0, 3, 4, 7, 10}, 10, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  const auto base = bump_initial(5.5, 2.0, grid);
  const auto times = time_grid(0.005, 600);
  const auto reference = neumann_closed_loop(layout, split(layout, base), times);

  auto perturbed = [&](double lo, double hi) {
    StateField f = base;
    for (Index j = 0; j < grid.size(); ++j)
      if (grid.node(j) > lo && grid.node(j) < hi) f.values(j) += std::sin(7.0 * grid.node(j));
    return neumann_closed_loop(layout, split(layout, f), times);
  };
  // away from both ends of subdomain 0 the data only feeds subdomain 0
  const auto inner = perturbed(0.8, 2.2);
  // anywhere inside subdomain 0 it cannot reach subdomain 3
  const auto whole = perturbed(0.0, 3.0);
  for (std::size_t k = 0; k < times.size(); k += 25) {
    for (Index p = 1; p < 4; ++p)
      CHECK(inner.trajectory.states[k].piece(p) == reference.trajectory.states[k].piece(p));
    CHECK(whole.trajectory.states[k].piece(3) == reference.trajectory.states[k].piece(3));
  }
}

TEST_CASE("neumann closed loop matches the open loop driven by its own control") {
  const auto layout = equidistant_chain(1, 4, 2);
  const double h = 0.005, step = h / 2.0;
  const auto grid = SpatialGrid::aligned(layout, h);
  const auto x0 = split(layout, bump_initial(0.6, 0.8, grid));
  const auto times = time_grid(step, 600);
  const auto run = neumann_closed_loop(layout, x0, times);
  const OpenLoopProblem open{layout, x0, Coupling::Neumann, ControlSignal(step, run.control)};
  for (std::size_t k = 0; k < times.size(); k += 100) {
    const Vector diff = neumann_solution(open, times[k]).stacked() - run.trajectory.states[k].stacked();
    CHECK(diff.cwiseAbs().maxCoeff() <= 2e-2);
  }
}

TEST_CASE("neumann H1 envelope") {
  const auto layout = equidistant_chain(1, 10, 2);
  const auto grid = SpatialGrid::aligned(layout, 0.01);
  const auto x0 = split(layout, bump_initial(0.6, 0.8, grid));
  const auto run = neumann_closed_loop(layout, x0, time_grid(0.05, 60));
  const auto constants = neumann_constants(layout.max_gap(), layout.min_gap(), 2.0);
  CHECK(envelope_check(run, constants.M, constants.k, NormKind::H1).pass);

  // the own-subdomain reference is zero downstream of the bump while the state is not
  const auto own = subdomain_envelope_check(run, constants.M, constants.k, SubdomainReference::Own);
  CHECK_FALSE(own.pass);
  CHECK(std::isinf(own.max_ratio));
  CHECK(subdomain_envelope_check(run, constants.M, constants.k, SubdomainReference::WithPredecessor).pass);
}
