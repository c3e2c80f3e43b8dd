#include "tchain/stabilizability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tchain {

namespace {

void check_monotone(std::span<const double> points, Index count) {
  for (Index i = 1; i < count; ++i) {
    if (!(points[i] > points[i - 1])) {
      std::ostringstream msg;
      msg << "point " << i << " (" << points[i] << ") does not exceed its predecessor";
      throw Error(Errc::NonMonotone, msg.str());
    }
  }
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(Errc::BadParam, std::string(name) + " must be > 0");
}

}  // namespace

GapReport gap_criterion(std::span<const double> points, Index horizon, double bound) {
  if (horizon < 1 || static_cast<Index>(points.size()) < horizon + 1)
    throw Error(Errc::BadParam, "horizon needs horizon + 1 points");
  check_monotone(points, horizon + 1);
  GapReport report;
  report.horizon = horizon;
  report.bound = bound;
  for (Index i = 0; i < horizon; ++i) {
    const double gap = points[i + 1] - points[i];
    if (gap > report.max_gap) {
      report.max_gap = gap;
      report.argmax = i;
    }
  }
  report.stabilizable = std::isfinite(report.max_gap) && report.max_gap <= bound;
  if (report.stabilizable) report.L0 = report.max_gap;
  return report;
}

GapReport gap_criterion(const ChainLayout& layout, double bound) {
  return gap_criterion(layout.access_points(), layout.num_subdomains(), bound);
}

GapReport family_gap_criterion(const std::function<ChainLayout(double)>& family,
                               std::span<const double> lengths, double bound) {
  if (lengths.empty()) throw Error(Errc::BadParam, "no domain lengths");
  GapReport worst;
  worst.bound = bound;
  for (double L : lengths) {
    const GapReport r = gap_criterion(family(L), bound);
    if (r.max_gap >= worst.max_gap) worst = r;
  }
  worst.stabilizable = worst.max_gap <= bound;
  worst.L0 = worst.stabilizable ? std::optional<double>(worst.max_gap) : std::nullopt;
  return worst;
}

IntervalCheck interval_criterion(std::span<const double> points, Interval interval) {
  if (!(interval.lo >= 0.0) || !(interval.lo <= interval.hi))
    throw Error(Errc::BadInterval, "interval must satisfy 0 <= lo <= hi");
  const auto it = std::upper_bound(points.begin(), points.end(), interval.lo);
  const bool hit = it != points.end() && *it < interval.hi;
  return {!hit, interval.length()};
}

IntervalCheck interval_criterion(const ChainLayout& layout, Interval interval) {
  return interval_criterion(layout.access_points(), interval);
}

double longest_free_interval_scan(std::span<const double> points, Index horizon) {
  if (horizon < 1 || static_cast<Index>(points.size()) < horizon + 1)
    throw Error(Errc::BadParam, "horizon needs horizon + 1 points");
  check_monotone(points, horizon + 1);
  const auto candidates = points.first(static_cast<std::size_t>(horizon + 1));
  double longest = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) {
      const IntervalCheck check = interval_criterion(candidates, {candidates[i], candidates[j]});
      if (check.disjoint) longest = std::max(longest, check.length);
    }
  }
  return longest;
}

DecayConstants dirichlet_constants(double L0, double k, double c) {
  require_positive(L0, "L0");
  require_positive(k, "k");
  require_positive(c, "c");
  DecayConstants out;
  out.variant = Coupling::Dirichlet;
  out.k = k;
  out.M = std::exp(2.0 * k * L0 / c);
  return out;
}

double default_trace_constant(double delta) {
  require_positive(delta, "delta");
  return 2.0 * std::max(1.0 / delta, 1.0);
}

DecayConstants neumann_constants(double L0, double delta, double c, std::optional<double> c0) {
  require_positive(L0, "L0");
  require_positive(delta, "delta");
  require_positive(c, "c");
  DecayConstants out;
  out.variant = Coupling::Neumann;
  out.c0 = c0 ? *c0 : default_trace_constant(delta);
  require_positive(out.c0, "c0");
  out.dt = delta / c;
  const double cdt = c * out.dt;
  out.K1 = 2.0 * out.c0 * L0 * std::exp(cdt) + 2.0 * (L0 / c) * std::exp(2.0 * cdt) + 1.0 + 1.0 / c;
  out.K2 = L0 * (out.c0 + 1.0 / c) * std::exp(2.0 * (L0 + cdt));
  out.M1 = std::sqrt(out.K1 * std::exp(2.0 * L0));
  out.M2 = std::sqrt(2.0 * out.K2 + std::exp(2.0 * (L0 + cdt)));
  out.M = std::max(out.M1, out.M2);
  out.k = c;
  return out;
}

double neumann_m1_for_length(const DecayConstants& constants, double a1) {
  require_positive(a1, "a1");
  return std::sqrt(constants.K1 * std::exp(2.0 * a1));
}

Certificate worst_case_certificate(double L0, double eps, const ChainLayout& layout, double M,
                                   double k) {
  require_positive(M, "M");
  require_positive(k, "k");
  require_positive(eps, "eps");
  if (!(L0 >= 0.0)) throw Error(Errc::BadParam, "L0 must be >= 0");
  const double c = layout.velocity();
  for (Index j = 0; j < layout.num_subdomains(); ++j) {
    const Interval gap = layout.subdomain(j);
    if (gap.length() > L0 + eps) {
      Certificate cert;
      cert.L0_target = L0;
      cert.gap_index = j;
      cert.gap = gap;
      cert.t_star = L0 / (2.0 * c);
      cert.support = {gap.lo, gap.lo + eps};
      cert.epsilon = eps;
      cert.envelope_factor = M * std::exp(-k * cert.t_star);
      return cert;
    }
  }
  std::ostringstream msg;
  msg << "no gap longer than L0 + eps = " << L0 + eps << " inside (0, " << layout.length() << ")";
  throw Error(Errc::NoSufficientGap, msg.str());
}

Certificate worst_case_certificate(double eps, const ChainLayout& layout, double M, double k) {
  require_positive(k, "k");
  const double L0 = 3.0 * layout.velocity() * std::abs(std::log(M) / k);
  return worst_case_certificate(L0, eps, layout, M, k);
}

ChainLayout reversed_chain(const ChainLayout& layout) {
  const Index n = layout.num_subdomains();
  const double end = layout.point(n);
  std::vector<double> mirrored;
  mirrored.reserve(static_cast<std::size_t>(n + 1));
  for (Index i = 0; i <= n; ++i) mirrored.push_back(end - layout.point(n - i));
  mirrored.front() = 0.0;
  mirrored.back() = end;
  return ChainLayout(std::move(mirrored), layout.length(), layout.velocity());
}

}  // namespace tchain
