#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <limits>
#include <string_view>
#include <vector>

#include "tpg/diagnostics.hpp"
#include "tpg/model.hpp"

namespace tpg {

// The constant steady state (ubar, 0, wbar) with the partaker absent.
struct SteadyState {
  double ubar = 0.0;
  double vbar = 0.0;
  double wbar = 0.0;
};

// Largest sign-change search interval is [0, s_max]. With s_max <= 0 it is
// 10 * A1 / B1 from the growth bounds of hypothesis_check(). Returns the
// smallest nonnegative root of -s g1(s, 0, wbar) + h1(s).
// Throws Error{NoRootInBracket}.
SteadyState trivial_steady_state(const ModelSpec& m, double wbar, double s_max = 0.0);

// Linearisation at the trivial state. Partials come from forward-mode
// differentiation of the rules; fd_discrepancy is the largest relative
// disagreement with central differences (step 1e-6) over the partials used.
struct JacobianEntries {
  double U1 = 0.0, U2 = 0.0, U3 = 0.0;
  double V2 = 0.0;
  double f = 0.0, g1 = 0.0, g2 = 0.0;
  double g1_u = 0.0, g1_v = 0.0, g1_w = 0.0;
  double h1_u = 0.0, h2_0 = 0.0, chi2 = 0.0;
  double fd_discrepancy = 0.0;
};

JacobianEntries jacobian_entries(const ModelSpec& m, const SteadyState& ss);

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 dispersion_matrix(const JacobianEntries& e, const ModelSpec& m, const SteadyState& ss, double k2);

// Eigenvalues at one squared wavenumber: sigma1 = -k2 D_v + V2 from the
// partaker row and the two roots of sigma^2 + a1 sigma + a0 from the rest.
struct GrowthRate {
  double k2 = 0.0;
  double sigma1 = 0.0;
  double a1 = 0.0, a0 = 0.0;
  std::array<std::complex<double>, 2> roots{};
  double sigma_max = 0.0;
  bool a1_positive = false;  // Routh-Hurwitz for the quadratic factor
  bool a0_positive = false;

  bool quadratic_stable() const { return a1_positive && a0_positive; }
};

GrowthRate growth_rate(const JacobianEntries& e, const ModelSpec& m, const SteadyState& ss, double k2);
std::vector<GrowthRate> growth_rates(const ModelSpec& m, const SteadyState& ss, const std::vector<double>& k2_list);

// Quadratic sigma^2 + a1 sigma + a0 solved directly.
std::array<std::complex<double>, 2> quadratic_roots(double a1, double a0);

enum class Verdict { stable, unstable_ineq1, unstable_ineq2, unstable_both };

std::string_view to_string(Verdict v);

struct VerdictDetail {
  Verdict verdict = Verdict::stable;
  double ineq1_lhs = 0.0, ineq1_rhs = 0.0;  // ubar f + g2  >  h2(0)
  double ineq2_lhs = 0.0, ineq2_rhs = 0.0;  // g1 + ubar g1_u + min{...}  >  h1'(ubar)
};

VerdictDetail proposition1_detail(const ModelSpec& m, const SteadyState& ss);
Verdict proposition1_verdict(const ModelSpec& m, const SteadyState& ss);

// Mass bounds for u, v and the conserved w mass.
MassBounds theorem1_bounds(const ModelSpec& m, const HypothesisBounds& hb, const State& s0, double gamma);

// 64 log-spaced values in [1e-3, 4 (pi / h)^2] merged with the Neumann
// eigenvalues (m pi / Lx)^2 + (n pi / Ly)^2 for 0 <= m, n <= 8, (m, n) != 0.
std::vector<double> default_k2_grid(const GridSpec& grid);

struct StabilityReport {
  std::string model;
  SteadyState steady;
  JacobianEntries entries;
  std::vector<GrowthRate> rates;
  VerdictDetail verdict;
  MassBounds bounds;
  HypothesisReport hypotheses;
  double sigma_max = 0.0;  // over the k2 grid
  double k2_at_max = 0.0;
};

// Linearises about wbar, or about the mean of s0.w when wbar is NaN. The mass
// bounds use s0. Throws Error{NoRootInBracket}.
StabilityReport analyze_stability(const ModelSpec& m, const State& s0, const Box& box = {},
                                  double wbar = std::numeric_limits<double>::quiet_NaN());

// Plain-text "key: value" document with a k2 table.
void write_report(std::ostream& os, const StabilityReport& r);

}  // namespace tpg
