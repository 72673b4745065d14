#include "tpg/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "tpg/error.hpp"

namespace tpg {

SteadyState trivial_steady_state(const ModelSpec& m, double wbar, double s_max) {
  if (!(s_max > 0.0)) {
    const HypothesisBounds hb = hypothesis_check(m).bounds;
    if (!(hb.A1 > 0.0 && hb.B1 > 0.0)) {
      std::ostringstream os;
      os << "A1=" << hb.A1 << " B1=" << hb.B1 << " reason=\"no growth bound for h1\"";
      throw Error(ErrorCode::NoRootInBracket, os.str());
    }
    s_max = 10.0 * hb.A1 / hb.B1;
  }
  auto phi = [&](double s) { return -s * m.g1(s, 0.0, wbar) + m.h1(s, 0.0, wbar); };

  SteadyState ss;
  ss.wbar = wbar;
  double lo = 0.0;
  double f_lo = phi(lo);
  if (f_lo == 0.0) return ss;

  // Scan for the first sign change so that the smallest root is bracketed.
  constexpr int kScan = 4096;
  double hi = lo;
  bool found = false;
  for (int k = 1; k <= kScan; ++k) {
    hi = s_max * k / kScan;
    const double f_hi = phi(hi);
    if (f_hi == 0.0) {
      ss.ubar = hi;
      return ss;
    }
    if ((f_lo < 0.0) != (f_hi < 0.0)) {
      found = true;
      break;
    }
    lo = hi;
    f_lo = f_hi;
  }
  if (!found) {
    std::ostringstream os;
    os << "s_max=" << s_max << " wbar=" << wbar;
    throw Error(ErrorCode::NoRootInBracket, os.str());
  }
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = phi(mid);
    if (f_mid == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((f_lo < 0.0) == (f_mid < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  ss.ubar = 0.5 * (lo + hi);
  return ss;
}

namespace {

double central_difference(const Rule& r, std::array<double, 3> x, int axis) {
  constexpr double h = 1e-6;
  std::array<double, 3> a = x, b = x;
  a[static_cast<std::size_t>(axis)] += h;
  b[static_cast<std::size_t>(axis)] -= h;
  return (r(a[0], a[1], a[2]) - r(b[0], b[1], b[2])) / (2.0 * h);
}

double relative_gap(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

}  // namespace

JacobianEntries jacobian_entries(const ModelSpec& m, const SteadyState& ss) {
  const double u = ss.ubar, w = ss.wbar;
  const std::array<double, 3> at{u, 0.0, w};
  JacobianEntries e;
  const RuleGradient g1 = m.g1.gradient(u, 0.0, w);
  const RuleGradient h1 = m.h1.gradient(u, 0.0, w);
  e.f = m.f(u, 0.0, w);
  e.g1 = g1.value;
  e.g2 = m.g2(u, 0.0, w);
  e.g1_u = g1.d(Var::u);
  e.g1_v = g1.d(Var::v);
  e.g1_w = g1.d(Var::w);
  e.h1_u = h1.d(Var::u);
  e.h2_0 = m.h2(0.0, 0.0, 0.0);
  e.chi2 = m.chi2(u, 0.0, w);

  e.U1 = -e.g1 + e.h1_u - u * e.g1_u;
  e.U2 = u * m.gamma * e.f - u * e.g1_v;
  e.U3 = -u * e.g1_w;
  e.V2 = -u * e.f - e.g2 + e.h2_0;

  for (int axis = 0; axis < 3; ++axis)
    e.fd_discrepancy = std::max(e.fd_discrepancy, relative_gap(g1.partial[static_cast<std::size_t>(axis)],
                                                               central_difference(m.g1, at, axis)));
  e.fd_discrepancy = std::max(e.fd_discrepancy, relative_gap(e.h1_u, central_difference(m.h1, at, 0)));
  return e;
}

Matrix3 dispersion_matrix(const JacobianEntries& e, const ModelSpec& m, const SteadyState& ss, double k2) {
  Matrix3 a{};
  a[0] = {-k2 * m.D_u + e.U1, e.U2, e.U3};
  a[1] = {0.0, -k2 * m.D_v + e.V2, 0.0};
  a[2] = {k2 * ss.wbar * e.chi2, 0.0, -k2 * m.D_w};
  return a;
}

std::array<std::complex<double>, 2> quadratic_roots(double a1, double a0) {
  const double disc = a1 * a1 - 4.0 * a0;
  if (disc >= 0.0) {
    // Cancellation-free form.
    const double q = -0.5 * (a1 + std::copysign(std::sqrt(disc), a1));
    if (q == 0.0) return {std::complex<double>(0.0), std::complex<double>(0.0)};
    return {std::complex<double>(q), std::complex<double>(a0 / q)};
  }
  const double im = 0.5 * std::sqrt(-disc);
  return {std::complex<double>(-0.5 * a1, im), std::complex<double>(-0.5 * a1, -im)};
}

GrowthRate growth_rate(const JacobianEntries& e, const ModelSpec& m, const SteadyState& ss, double k2) {
  GrowthRate g;
  g.k2 = k2;
  g.sigma1 = -k2 * m.D_v + e.V2;
  g.a1 = k2 * (m.D_u + m.D_w) - e.U1;
  g.a0 = k2 * (k2 * m.D_u * m.D_w - m.D_w * e.U1 - ss.wbar * e.chi2 * e.U3);
  g.roots = quadratic_roots(g.a1, g.a0);
  g.sigma_max = std::max({g.sigma1, g.roots[0].real(), g.roots[1].real()});
  g.a1_positive = g.a1 > 0.0;
  g.a0_positive = g.a0 > 0.0;
  return g;
}

std::vector<GrowthRate> growth_rates(const ModelSpec& m, const SteadyState& ss, const std::vector<double>& k2_list) {
  const JacobianEntries e = jacobian_entries(m, ss);
  std::vector<GrowthRate> out;
  out.reserve(k2_list.size());
  for (double k2 : k2_list) out.push_back(growth_rate(e, m, ss, k2));
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable_ineq1: return "unstable-ineq1";
    case Verdict::unstable_ineq2: return "unstable-ineq2";
    case Verdict::unstable_both: return "unstable-both";
  }
  return "unstable-both";
}

VerdictDetail proposition1_detail(const ModelSpec& m, const SteadyState& ss) {
  const JacobianEntries e = jacobian_entries(m, ss);
  const double u = ss.ubar;
  VerdictDetail d;
  d.ineq1_lhs = u * e.f + e.g2;
  d.ineq1_rhs = e.h2_0;
  d.ineq2_lhs = e.g1 + u * e.g1_u + std::min(u * ss.wbar * e.chi2 / m.D_w * e.g1_w, 0.0);
  d.ineq2_rhs = e.h1_u;
  const bool ok1 = d.ineq1_lhs > d.ineq1_rhs;
  const bool ok2 = d.ineq2_lhs > d.ineq2_rhs;
  d.verdict = ok1 && ok2 ? Verdict::stable
              : ok2      ? Verdict::unstable_ineq1
              : ok1      ? Verdict::unstable_ineq2
                         : Verdict::unstable_both;
  return d;
}

Verdict proposition1_verdict(const ModelSpec& m, const SteadyState& ss) { return proposition1_detail(m, ss).verdict; }

MassBounds theorem1_bounds(const ModelSpec& m, const HypothesisBounds& hb, const State& s0, double gamma) {
  (void)m;
  const double area = s0.grid().area();
  const double mass_u = integrate(s0.u);
  const double mass_v = integrate(s0.v);
  MassBounds b;
  b.C2 = std::max(mass_v, hb.A2 * area / hb.B2);
  b.C1 = std::max(mass_u + gamma * mass_v, (hb.A1 * area + gamma * b.C2 * (hb.A2 + hb.B1)) / hb.B1);
  b.C3 = integrate(s0.w);
  return b;
}

std::vector<double> default_k2_grid(const GridSpec& grid) {
  constexpr int kLog = 64;
  constexpr int kModes = 8;
  const double h = std::min(grid.hx(), grid.hy());
  const double lo = 1e-3;
  const double hi = 4.0 * (std::numbers::pi / h) * (std::numbers::pi / h);
  std::vector<double> k2;
  for (int k = 0; k < kLog; ++k) k2.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (kLog - 1)));
  const double px = std::numbers::pi / grid.length_x, py = std::numbers::pi / grid.length_y;
  for (int a = 0; a <= kModes; ++a)
    for (int b = 0; b <= kModes; ++b)
      if (a != 0 || b != 0) k2.push_back(a * a * px * px + b * b * py * py);
  std::sort(k2.begin(), k2.end());
  k2.erase(std::unique(k2.begin(), k2.end()), k2.end());
  return k2;
}

StabilityReport analyze_stability(const ModelSpec& m, const State& s0, const Box& box, double wbar) {
  StabilityReport r;
  r.model = m.name;
  r.hypotheses = hypothesis_check(m, box);
  const HypothesisBounds& hb = r.hypotheses.bounds;
  if (std::isnan(wbar)) wbar = integrate(s0.w) / s0.grid().area();
  const double s_max = hb.A1 > 0.0 && hb.B1 > 0.0 ? 10.0 * hb.A1 / hb.B1 : box.u[1];
  r.steady = trivial_steady_state(m, wbar, s_max);
  r.entries = jacobian_entries(m, r.steady);
  for (double k2 : default_k2_grid(s0.grid())) r.rates.push_back(growth_rate(r.entries, m, r.steady, k2));
  r.sigma_max = -std::numeric_limits<double>::infinity();
  for (const GrowthRate& g : r.rates) {
    if (g.sigma_max > r.sigma_max) {
      r.sigma_max = g.sigma_max;
      r.k2_at_max = g.k2;
    }
  }
  r.verdict = proposition1_detail(m, r.steady);
  if (!r.hypotheses.violates("H3")) r.bounds = theorem1_bounds(m, hb, s0, m.gamma);
  r.bounds.C3 = integrate(s0.w);
  return r;
}

void write_report(std::ostream& os, const StabilityReport& r) {
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  os << "model: " << r.model << '\n';
  os << "ubar: " << num(r.steady.ubar) << '\n';
  os << "vbar: " << num(r.steady.vbar) << '\n';
  os << "wbar: " << num(r.steady.wbar) << '\n';
  os << "U1: " << num(r.entries.U1) << '\n';
  os << "U2: " << num(r.entries.U2) << '\n';
  os << "U3: " << num(r.entries.U3) << '\n';
  os << "V2: " << num(r.entries.V2) << '\n';
  os << "fd_discrepancy: " << num(r.entries.fd_discrepancy) << '\n';
  os << "ineq1: " << num(r.verdict.ineq1_lhs) << " > " << num(r.verdict.ineq1_rhs) << '\n';
  os << "ineq2: " << num(r.verdict.ineq2_lhs) << " > " << num(r.verdict.ineq2_rhs) << '\n';
  os << "verdict: " << to_string(r.verdict.verdict) << '\n';
  os << "sigma_max: " << num(r.sigma_max) << '\n';
  os << "k2_at_max: " << num(r.k2_at_max) << '\n';
  if (r.hypotheses.violates("H3")) {
    os << "C1: n/a\nC2: n/a\n";
  } else {
    os << "C1: " << num(r.bounds.C1) << '\n';
    os << "C2: " << num(r.bounds.C2) << '\n';
  }
  os << "C3: " << num(r.bounds.C3) << '\n';
  os << "hypotheses: " << (r.hypotheses.passes() ? "pass" : "fail") << '\n';
  for (const Violation& v : r.hypotheses.violations)
    os << "violation: " << v.hypothesis << ' ' << v.rule << ' ' << v.message << '\n';
  os << "k2,sigma1,root1_re,root1_im,root2_re,root2_im,sigma_max,a1_positive,a0_positive\n";
  for (const GrowthRate& g : r.rates) {
    os << num(g.k2) << ',' << num(g.sigma1) << ',' << num(g.roots[0].real()) << ',' << num(g.roots[0].imag()) << ','
       << num(g.roots[1].real()) << ',' << num(g.roots[1].imag()) << ',' << num(g.sigma_max) << ','
       << (g.a1_positive ? 1 : 0) << ',' << (g.a0_positive ? 1 : 0) << '\n';
  }
}

}  // namespace tpg
