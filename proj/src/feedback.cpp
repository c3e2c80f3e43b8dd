#include "tchain/feedback.hpp"

#include <cmath>
#include <limits>

#include "tchain/mild.hpp"
#include "tchain/norms.hpp"

namespace tchain {

namespace {

void require_times(std::span<const double> times) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0)) throw Error(Errc::NegativeTime, "times must be >= 0");
  }
}

void require_finite(const PiecewiseField& x0) {
  for (Index p = 0; p < x0.num_pieces(); ++p)
    if (!x0.piece(p).allFinite() || !std::isfinite(h1_piece(x0, p)))
      throw Error(Errc::BadInitialData, "initial value has no finite H1 norm");
}

// x0 on the whole domain; zero beyond L
double global_value(const ChainLayout& layout, const PiecewiseField& x0, double x) {
  if (x > layout.length() + 1e-12 * layout.length()) return 0.0;
  return x0.value(layout.subdomain_of(x), x);
}

double table_value(const Vector& table, double step, double s) {
  return interpolate_nodes(table, step, 0.0, s);
}

}  // namespace

double kappa(double t, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::BadParam, "dt must be > 0");
  if (!(t >= 0.0)) throw Error(Errc::BadParam, "kappa needs t >= 0");
  return (t <= dt / 2.0) ? 2.0 * t / dt : 1.0;
}

double kappa_integral(double t, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::BadParam, "dt must be > 0");
  if (t <= 0.0) return 0.0;
  if (t <= dt / 2.0) return t * t / dt;
  return dt / 4.0 + (t - dt / 2.0);
}

ClosedLoopRun dirichlet_closed_loop(const ChainLayout& layout, const PiecewiseField& x0,
                                    std::span<const double> times) {
  require_times(times);
  require_finite(x0);
  const double c = layout.velocity();
  const double dt = layout.min_gap() / c;
  DirichletTraceback traceback(
      layout, x0, [&layout, &x0, c, dt](Index p, double s, double upstream) {
        const double pass = 1.0 - kappa(s, dt);
        return (p == 0) ? pass * global_value(layout, x0, c * s) : pass * upstream;
      });

  ClosedLoopRun run{layout, x0, Coupling::Dirichlet, {}, {}, dt};
  const Index channels = layout.num_subdomains();
  run.control = Eigen::MatrixXd::Zero(static_cast<Index>(times.size()), channels);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    run.trajectory.times.push_back(t);
    run.trajectory.states.push_back(traceback.sample(t));
    const double ramp = kappa(t, dt);
    const auto row = static_cast<Index>(k);
    run.control(row, 0) = (1.0 - ramp) * global_value(layout, x0, c * t);
    for (Index p = 1; p < channels; ++p) run.control(row, p) = -ramp * traceback.trace(p - 1, t);
  }
  return run;
}

Vector neumann_boundary_ode(const Vector& forcing, double y0, double step, double c, double dt) {
  if (forcing.size() == 0) throw Error(Errc::GridMismatch, "forcing has no samples");
  if (!(step > 0.0) || !(c > 0.0) || !(dt > 0.0))
    throw Error(Errc::BadParam, "step, c and dt must be > 0");
  const Index n = forcing.size();
  Vector y(n);
  double convolution = 0.0;
  double previous = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double s = step * static_cast<double>(i);
    const double integrand =
        std::exp(c * kappa_integral(s, dt)) * (1.0 - kappa(s, dt)) * forcing(i);
    if (i > 0) convolution += 0.5 * step * (previous + integrand);
    previous = integrand;
    y(i) = std::exp(-c * kappa_integral(s, dt)) * (y0 - c * convolution);
  }
  return y;
}

ClosedLoopRun neumann_closed_loop(const ChainLayout& layout, const PiecewiseField& x0,
                                  std::span<const double> times) {
  require_times(times);
  require_finite(x0);
  const double c = layout.velocity();
  const double h = x0.grid().spacing();
  const double dt = layout.min_gap() / c;
  const double step = h / c;
  double horizon = 0.0;
  for (double t : times) horizon = std::max(horizon, t);
  const Index samples = static_cast<Index>(std::ceil(horizon / step - 1e-9)) + 2;
  const Index pieces = x0.num_pieces();

  std::vector<Vector> slope0;
  for (Index p = 0; p < pieces; ++p) slope0.push_back(difference_quotient(x0.piece(p), h));
  auto x0_slope = [&](Index p, double x) {
    return interpolate_nodes(slope0[p], h, x0.origin(p), x);
  };

  // forcing f_p and boundary value y_p on s_n = n step
  std::vector<Vector> forcing(static_cast<std::size_t>(pieces), Vector::Zero(samples));
  std::vector<Vector> boundary(static_cast<std::size_t>(pieces));
  for (Index p = 0; p < pieces; ++p) {
    Vector& f = forcing[p];
    for (Index n = 0; n < samples; ++n) {
      const double s = step * static_cast<double>(n);
      if (p == 0) {
        const double x = c * s;
        f(n) = (x > layout.length()) ? 0.0 : x0_slope(layout.subdomain_of(x), x);
        continue;
      }
      const Index cells = x0.piece(p - 1).size() - 1;
      if (n >= cells) {
        // derivative at the predecessor's right end equals -y'_{p-1}/c at the retarded time
        const Index r = n - cells;
        const double ramp = kappa(step * static_cast<double>(r), dt);
        f(n) = ramp * boundary[p - 1](r) + (1.0 - ramp) * forcing[p - 1](r);
      } else {
        const double right = x0.origin(p - 1) + h * static_cast<double>(cells);
        f(n) = x0_slope(p - 1, right - c * s);
      }
    }
    boundary[p] = neumann_boundary_ode(f, x0.piece(p)(0), step, c, dt);
  }

  ClosedLoopRun run{layout, x0, Coupling::Neumann, {}, {}, dt};
  run.control = Eigen::MatrixXd::Zero(static_cast<Index>(times.size()), pieces);
  auto inflow = [&](Index p, double s) { return table_value(boundary[p], step, s); };
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    run.trajectory.times.push_back(t);
    run.trajectory.states.push_back(sample_characteristics(layout, x0, t, inflow));
    const double ramp = kappa(t, dt);
    const auto row = static_cast<Index>(k);
    for (Index p = 0; p < pieces; ++p) {
      const double y = inflow(p, t);
      const double f = table_value(forcing[p], step, t);
      run.control(row, p) = (p == 0) ? (1.0 - ramp) * f + ramp * y : -ramp * f + ramp * y;
    }
  }
  return run;
}

EnvelopeReport envelope_check(const ClosedLoopRun& run, double M, double k, NormKind norm,
                              double slack_c) {
  if (run.trajectory.empty()) throw Error(Errc::EmptyTrajectory, "no time slices");
  auto measure = [norm](const PiecewiseField& f) { return norm == NormKind::L2 ? l2(f) : h1(f); };
  EnvelopeReport report;
  report.tolerance = (1.0 + 1e-9) * (1.0 + slack_c * run.x0.grid().spacing());
  const double initial = measure(run.x0);
  if (initial == 0.0) {
    report.vacuous = true;
    return report;
  }
  for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
    const double t = run.trajectory.times[i];
    const double ratio = measure(run.trajectory.states[i]) / (M * std::exp(-k * t) * initial);
    if (ratio > report.max_ratio) {
      report.max_ratio = ratio;
      report.worst_time = t;
    }
  }
  report.pass = report.max_ratio <= report.tolerance;
  return report;
}

SubdomainEnvelopeReport subdomain_envelope_check(const ClosedLoopRun& run, double M, double k,
                                                 SubdomainReference reference, double slack_c) {
  if (run.trajectory.empty()) throw Error(Errc::EmptyTrajectory, "no time slices");
  SubdomainEnvelopeReport report;
  report.tolerance = (1.0 + 1e-9) * (1.0 + slack_c * run.x0.grid().spacing());
  const Index pieces = run.x0.num_pieces();
  Vector ref(pieces);
  for (Index p = 0; p < pieces; ++p) {
    double sq = std::pow(h1_piece(run.x0, p), 2);
    if (reference == SubdomainReference::WithPredecessor && p > 0)
      sq += std::pow(h1_piece(run.x0, p - 1), 2);
    ref(p) = std::sqrt(sq);
  }
  for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
    const double t = run.trajectory.times[i];
    for (Index p = 0; p < pieces; ++p) {
      const double value = h1_piece(run.trajectory.states[i], p);
      double ratio = 0.0;
      if (ref(p) > 0.0) {
        ratio = value / (M * std::exp(-k * t) * ref(p));
      } else if (value > 0.0) {
        ratio = std::numeric_limits<double>::infinity();
      }
      if (ratio > report.max_ratio) {
        report.max_ratio = ratio;
        report.worst_subdomain = p;
        report.worst_time = t;
      }
    }
  }
  report.pass = report.max_ratio <= report.tolerance;
  return report;
}

}  // namespace tchain
