#include "tchain/mild.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tchain {

namespace {

constexpr double kNotComputed = std::numeric_limits<double>::quiet_NaN();

void require_time(double t) {
  if (!(t >= 0.0)) throw Error(Errc::NegativeTime, "time must be >= 0");
}

double piece_length(const PiecewiseField& field, Index p) {
  return field.grid().spacing() * static_cast<double>(field.piece(p).size() - 1);
}

}  // namespace

void OpenLoopProblem::validate() const {
  if (control.channels() != layout.num_subdomains())
    throw Error(Errc::GridMismatch, "control channels must equal the number of subdomains");
  if (!(x0.partition() == ChainPartition(layout, x0.grid())))
    throw Error(Errc::GridMismatch, "initial value partition does not match the layout");
}

PiecewiseField sample_characteristics(const ChainLayout& layout, const PiecewiseField& x0,
                                      double t,
                                      const std::function<double(Index, double)>& inflow) {
  require_time(t);
  if (t == 0.0) return x0;
  const double h = x0.grid().spacing();
  const double c = layout.velocity();
  const double front = c * t + 1e-9 * h;
  PiecewiseField out = PiecewiseField::zero(x0.partition());
  for (Index p = 0; p < out.num_pieces(); ++p) {
    Vector& piece = out.piece(p);
    const double origin = x0.origin(p);
    for (Index j = 0; j < piece.size(); ++j) {
      const double d = static_cast<double>(j) * h;
      piece(j) = (d <= front) ? inflow(p, std::max(t - d / c, 0.0))
                              : x0.value(p, origin + d - c * t);
    }
  }
  return out;
}

DirichletTraceback::DirichletTraceback(ChainLayout layout, PiecewiseField x0, Law law)
    : layout_(std::move(layout)),
      x0_(std::move(x0)),
      law_(std::move(law)),
      memo_step_(x0_.grid().spacing() / layout_.velocity()),
      memo_(static_cast<std::size_t>(x0_.num_pieces())) {}

double DirichletTraceback::inflow(Index p, double s) {
  const double n = s / memo_step_;
  const double r = std::round(n);
  const bool on_grid = r >= 0.0 && std::abs(n - r) < 1e-9;
  std::size_t key = 0;
  if (on_grid) {
    // snap so the memoized value does not depend on which caller computed it first
    s = r * memo_step_;
    key = static_cast<std::size_t>(r);
    auto& table = memo_[static_cast<std::size_t>(p)];
    if (key < table.size() && !std::isnan(table[key])) return table[key];
  }
  const double upstream = (p > 0) ? trace(p - 1, s) : 0.0;
  const double value = law_(p, s, upstream);
  if (on_grid) {
    auto& table = memo_[static_cast<std::size_t>(p)];
    if (key >= table.size()) table.resize(std::max(key + 1, 2 * table.size()), kNotComputed);
    table[key] = value;
  }
  return value;
}

double DirichletTraceback::trace(Index p, double s) {
  const double c = layout_.velocity();
  const double length = piece_length(x0_, p);
  if (length <= c * s + 1e-9 * x0_.grid().spacing())
    return inflow(p, std::max(s - length / c, 0.0));
  return x0_.value(p, x0_.origin(p) + length - c * s);
}

PiecewiseField DirichletTraceback::sample(double t) {
  return sample_characteristics(layout_, x0_, t,
                                [this](Index p, double s) { return inflow(p, s); });
}

PiecewiseField autonomous_solution(const ChainLayout& layout, const PiecewiseField& x0,
                                   double t, Coupling bc) {
  require_time(t);
  if (bc == Coupling::Dirichlet)
    return sample_characteristics(layout, x0, t, [](Index, double) { return 0.0; });
  return sample_characteristics(layout, x0, t,
                                [&x0](Index p, double) { return x0.piece(p)(0); });
}

PiecewiseField dirichlet_solution(const OpenLoopProblem& problem, double t) {
  if (problem.bc != Coupling::Dirichlet)
    throw Error(Errc::BcMismatch, "dirichlet_solution needs Dirichlet coupling");
  require_time(t);
  problem.validate();
  const ControlSignal& u = problem.control;
  DirichletTraceback traceback(problem.layout, problem.x0,
                               [&u](Index p, double s, double upstream) { return upstream + u(p, s); });
  return traceback.sample(t);
}

namespace {

// int_0^s v_p(r) dr with v_p = d/dw x_{p-1}(a_p, r) + u_p(r)
double neumann_input_integral(const OpenLoopProblem& problem, Index p, double s) {
  double total = problem.control.integral(p, s);
  if (p == 0) return total;
  const PiecewiseField& x0 = problem.x0;
  const double c = problem.layout.velocity();
  const double length = piece_length(x0, p - 1);
  const double right = x0.origin(p - 1) + length;
  // before the predecessor's right end is swept, its derivative there is x0'(a_p - c r)
  const double unswept = std::min(s, length / c);
  total += (x0.value(p - 1, right) - x0.value(p - 1, right - c * unswept)) / c;
  // afterwards it is v_{p-1} at the retarded time
  if (s * c > length) total += neumann_input_integral(problem, p - 1, s - length / c);
  return total;
}

}  // namespace

double neumann_transformed_input(const OpenLoopProblem& problem, Index p, double s) {
  return problem.x0.piece(p)(0) - problem.layout.velocity() * neumann_input_integral(problem, p, s);
}

PiecewiseField neumann_solution(const OpenLoopProblem& problem, double t) {
  if (problem.bc != Coupling::Neumann)
    throw Error(Errc::BcMismatch, "neumann_solution needs Neumann coupling");
  require_time(t);
  problem.validate();
  return sample_characteristics(problem.layout, problem.x0, t, [&problem](Index p, double s) {
    return neumann_transformed_input(problem, p, s);
  });
}

Trajectory solve_open_loop(const OpenLoopProblem& problem, std::span<const double> times) {
  problem.validate();
  Trajectory out;
  if (problem.bc == Coupling::Dirichlet) {
    const ControlSignal& u = problem.control;
    DirichletTraceback traceback(
        problem.layout, problem.x0,
        [&u](Index p, double s, double upstream) { return upstream + u(p, s); });
    for (double t : times) {
      require_time(t);
      out.times.push_back(t);
      out.states.push_back(traceback.sample(t));
    }
  } else {
    for (double t : times) {
      out.times.push_back(t);
      out.states.push_back(neumann_solution(problem, t));
    }
  }
  return out;
}

std::vector<Interval> controlled_support(const ChainLayout& layout, double t) {
  require_time(t);
  std::vector<Interval> out;
  const double reach = layout.velocity() * t;
  if (reach <= 0.0) return out;
  for (Index p = 0; p < layout.num_subdomains(); ++p) {
    const double lo = layout.point(p);
    const double hi = std::min(lo + reach, layout.length());
    if (hi <= lo) continue;
    if (!out.empty() && lo <= out.back().hi) {
      out.back().hi = std::max(out.back().hi, hi);
    } else {
      out.push_back({lo, hi});
    }
  }
  return out;
}

Trajectory upwind_reference(const OpenLoopProblem& problem, double T, double courant,
                            Index output_every) {
  problem.validate();
  require_time(T);
  if (!(courant > 0.0 && courant <= 1.0))
    throw Error(Errc::BadParam, "Courant number must lie in (0, 1]");
  if (output_every < 1) throw Error(Errc::BadParam, "output_every must be >= 1");
  const double h = problem.x0.grid().spacing();
  const double c = problem.layout.velocity();
  const auto steps = std::max<Index>(
      1, static_cast<Index>(std::ceil(T * c / (courant * h) - 1e-9)));
  const double tau = T / static_cast<double>(steps);
  const double nu = c * tau / h;
  const ControlSignal& u = problem.control;

  PiecewiseField state = problem.x0;
  Trajectory out;
  out.times.push_back(0.0);
  out.states.push_back(state);
  for (Index n = 0; n < steps; ++n) {
    const double t_old = tau * static_cast<double>(n);
    const double t_new = tau * static_cast<double>(n + 1);
    PiecewiseField next = state;
    for (Index p = 0; p < state.num_pieces(); ++p) {
      const Vector& old = state.piece(p);
      Vector& piece = next.piece(p);
      const Index m = old.size() - 1;
      piece.tail(m) = old.tail(m) - nu * (old.tail(m) - old.head(m));
      if (problem.bc == Coupling::Dirichlet) {
        const double upstream = (p > 0) ? next.piece(p - 1)(next.piece(p - 1).size() - 1) : 0.0;
        piece(0) = upstream + u(p, t_new);
      } else {
        double slope = 0.0;
        if (p > 0) {
          const Vector& prev = state.piece(p - 1);
          const Index e = prev.size() - 1;
          slope = (prev(e) - prev(e - 1)) / h;
        }
        piece(0) = old(0) - c * tau * (slope + u(p, t_old));
      }
    }
    state = std::move(next);
    if ((n + 1) % output_every == 0 || n + 1 == steps) {
      out.times.push_back(t_new);
      out.states.push_back(state);
    }
  }
  return out;
}

}  // namespace tchain
