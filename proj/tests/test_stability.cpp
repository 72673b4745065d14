#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "tpg/error.hpp"
#include "tpg/stability.hpp"
#include "tpg/stepper.hpp"

using namespace tpg;

namespace {

constexpr double kPi = std::numbers::pi;

ParamMap negotiated(double phi_a, double phi_p) {
  return {{"D_A", 0.1}, {"D_P", 0.1}, {"D_M", 0.1}, {"chi_P", 2.0}, {"chi_M", 1.0},
          {"Phi_A", phi_a}, {"Phi_P", phi_p}, {"psi", 0.1}, {"Psi", 5.0}};
}

const ParamMap kBullying = {{"D_V", 0.05}, {"D_B", 0.05}, {"D_G", 0.05}, {"chi_B", 2.0},
                            {"chi_G", 2.0}, {"Phi_V", 0.5}, {"Phi_B", 1.0}, {"Psi", 10.0}};

// Eigenvalues of a real 3x3 matrix as roots of its characteristic cubic,
// found by Durand-Kerner iteration (independent of the closed forms).
std::array<std::complex<double>, 3> eigenvalues(const Matrix3& a) {
  const double tr = a[0][0] + a[1][1] + a[2][2];
  const double minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] +
                        a[1][1] * a[2][2] - a[1][2] * a[2][1];
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  auto p = [&](std::complex<double> z) { return z * z * z - tr * z * z + minors * z - det; };
  std::array<std::complex<double>, 3> z{std::complex<double>(0.4, 0.9), std::complex<double>(0.4, 0.9),
                                        std::complex<double>(0.4, 0.9)};
  z[1] = z[0] * z[0];
  z[2] = z[1] * z[0];
  const double scale = 1.0 + std::abs(tr) + std::abs(minors) + std::abs(det);
  for (auto& zi : z) zi *= scale;
  for (int it = 0; it < 2000; ++it)
    for (int i = 0; i < 3; ++i) {
      std::complex<double> den = 1.0;
      for (int j = 0; j < 3; ++j)
        if (j != i) den *= z[i] - z[j];
      z[i] -= p(z[i]) / den;
    }
  return z;
}

}  // namespace

TEST(SteadyState, BullyingCaptionValues) {
  const ModelSpec m = preset("bullying", kBullying);
  EXPECT_NEAR(trivial_steady_state(m, 1.0).ubar, 0.25, 1e-10);
  EXPECT_NEAR(trivial_steady_state(m, 0.5).ubar, 1.0 / 3.0, 1e-10);
  EXPECT_NEAR(trivial_steady_state(m, 0.25).ubar, 0.4, 1e-10);
  const SteadyState ss = trivial_steady_state(m, 0.25);
  EXPECT_EQ(ss.vbar, 0.0);
  EXPECT_EQ(ss.wbar, 0.25);
}

TEST(SteadyState, NegotiatedAndResidual) {
  const ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  const SteadyState ss = trivial_steady_state(m, 1.0);
  EXPECT_NEAR(ss.ubar, 1.0, 1e-10);
  EXPECT_LE(std::abs(-ss.ubar * m.g1(ss.ubar, 0.0, 1.0) + m.h1(ss.ubar)), 1e-10);
}

TEST(SteadyState, SmallestRootAndDegenerateCase) {
  const ParamMap d = {{"D_u", 1.0}, {"D_v", 1.0}, {"D_w", 1.0}};
  // -s g1 + h1 = (1 - s)(2 - s)(3 - s) / 6 has roots 1, 2, 3 in the bracket.
  RuleTexts rules = {{"f", "1"},      {"g1", "0"},    {"g2", "0"},   {"h1", "(1 - u) * (2 - u) * (3 - u) / 6"},
                     {"h2", "1 - v"}, {"chi1", "1"}, {"chi2", "1"}};
  EXPECT_NEAR(trivial_steady_state(preset("general", d, rules), 1.0, 10.0).ubar, 1.0, 1e-10);
  rules["h1"] = "-u";
  const ModelSpec zero = preset("general", d, rules);
  const SteadyState ss = trivial_steady_state(zero, 1.0, 10.0);
  EXPECT_EQ(ss.ubar, 0.0);
  const JacobianEntries e = jacobian_entries(zero, ss);
  EXPECT_EQ(e.U2, 0.0);
  EXPECT_EQ(e.U3, 0.0);
}

TEST(SteadyState, NoRoot) {
  const ParamMap d = {{"D_u", 1.0}, {"D_v", 1.0}, {"D_w", 1.0}};
  const RuleTexts rules = {{"f", "1"},      {"g1", "0"},    {"g2", "0"},   {"h1", "1 + u * u"},
                           {"h2", "1 - v"}, {"chi1", "1"}, {"chi2", "1"}};
  try {
    trivial_steady_state(preset("general", d, rules), 1.0, 10.0);
    FAIL() << "expected NoRootInBracket";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoRootInBracket);
  }
}

TEST(Jacobian, NegotiatedEntries) {
  const ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  const SteadyState ss = trivial_steady_state(m, 1.0);
  const JacobianEntries e = jacobian_entries(m, ss);
  EXPECT_NEAR(e.V2, 1.0, 1e-12);  // -1 * 1 - 0 + 2
  // g1 = v (psi + w) / (1 + exp(-(v - Psi))): at v = 0 only d/dv survives.
  EXPECT_NEAR(e.U1, -1.0, 1e-12);
  EXPECT_NEAR(e.U2, 1.0 - (0.1 + 1.0) / (1.0 + std::exp(5.0)), 1e-12);
  EXPECT_NEAR(e.U3, 0.0, 1e-15);
  EXPECT_LT(e.fd_discrepancy, 1e-6);
}

TEST(Jacobian, BullyingV2) {
  // With f = 1: V2 = -ubar - wbar (1 + tanh ubar) + Phi_B.
  const ModelSpec m = preset("bullying", kBullying);
  for (double wbar : {1.0, 0.5, 0.25}) {
    const SteadyState ss = trivial_steady_state(m, wbar);
    const double u = 0.5 / (1.0 + wbar);
    EXPECT_NEAR(jacobian_entries(m, ss).V2, -u - wbar * (1.0 + std::tanh(u)) + 1.0, 1e-10);
  }
}

TEST(Dispersion, MatrixRowsAndSigma1) {
  const ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  const SteadyState ss = trivial_steady_state(m, 1.0);
  const JacobianEntries e = jacobian_entries(m, ss);
  const Matrix3 a0 = dispersion_matrix(e, m, ss, 0.0);
  EXPECT_EQ(a0[0][0], e.U1);
  EXPECT_EQ(a0[0][1], e.U2);
  EXPECT_EQ(a0[0][2], e.U3);
  EXPECT_EQ(a0[1][1], e.V2);
  for (double x : a0[2]) EXPECT_EQ(x, 0.0);
  EXPECT_NEAR(growth_rate(e, m, ss, 10.0).sigma1, 0.0, 1e-12);
  for (double k2 : {0.0, 0.5, 3.0, 10.0, 250.0}) {
    const Matrix3 a = dispersion_matrix(e, m, ss, k2);
    EXPECT_NEAR(a[1][1], growth_rate(e, m, ss, k2).sigma1, 1e-12);
  }
  const GrowthRate g0 = growth_rate(e, m, ss, 0.0);
  EXPECT_TRUE(std::abs(g0.roots[0]) == 0.0 || std::abs(g0.roots[1]) == 0.0);
}

TEST(Dispersion, GrowthRatesMatchFullEigenvalues) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    ParamMap p = negotiated(U(rng), U(rng));
    p["chi_M"] = U(rng);
    p["psi"] = U(rng);
    const ModelSpec m = preset("protest-negotiated", p);
    const SteadyState ss = trivial_steady_state(m, U(rng));
    const JacobianEntries e = jacobian_entries(m, ss);
    for (double k2 : {0.01, 1.0, 5.0, 40.0}) {
      const auto ev = eigenvalues(dispersion_matrix(e, m, ss, k2));
      double re = -1e300;
      for (auto z : ev) re = std::max(re, z.real());
      EXPECT_NEAR(growth_rate(e, m, ss, k2).sigma_max, re, 1e-8 * std::max(1.0, std::abs(re)));
    }
  }
}

TEST(Dispersion, NegotiatedMaxSigmaIsV2AtSmallK) {
  const ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  const SteadyState ss = trivial_steady_state(m, 1.0);
  const auto rates = growth_rates(m, ss, {1e-6, 1.0, 2.0, 5.0});
  EXPECT_NEAR(rates[0].sigma_max, 1.0, 1e-6);
  EXPECT_NEAR(rates[1].sigma1, 0.9, 1e-12);
  EXPECT_NEAR(rates[2].sigma1, 0.8, 1e-12);
  EXPECT_NEAR(rates[3].sigma1, 0.5, 1e-12);
}

TEST(Dispersion, StableConfigurationDecaysForAllK) {
  const ModelSpec m = preset("protest-negotiated", negotiated(2.0, 1.0));
  const SteadyState ss = trivial_steady_state(m, 1.0);
  const GridSpec g = GridSpec::make(kPi, kPi, 64, 64);
  for (const GrowthRate& r : growth_rates(m, ss, default_k2_grid(g))) EXPECT_LT(r.sigma_max, 0.0) << "k2=" << r.k2;
}

// Routh-Hurwitz for sigma^2 + a1 sigma + a0 against the roots themselves.
TEST(Dispersion, RouthHurwitzAgreesWithRoots) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> S(-3.0, 3.0), P(0.01, 3.0), K(0.0, 20.0);
  ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  for (int trial = 0; trial < 1000; ++trial) {
    JacobianEntries e;
    e.U1 = S(rng);
    e.U3 = S(rng);
    e.chi2 = P(rng);
    m.D_u = P(rng);
    m.D_w = P(rng);
    const SteadyState ss{0.5, 0.0, P(rng)};
    const double k2 = K(rng);
    const GrowthRate g = growth_rate(e, m, ss, k2);
    const bool roots_stable = g.roots[0].real() < 0.0 && g.roots[1].real() < 0.0;
    if (std::abs(g.a0) < 1e-12 || std::abs(g.a1) < 1e-12) continue;  // marginal
    EXPECT_EQ(g.quadratic_stable(), roots_stable) << "a1=" << g.a1 << " a0=" << g.a0;
  }
}

TEST(Verdict, NegotiatedCaseStudy) {
  const ModelSpec unstable = preset("protest-negotiated", negotiated(1.0, 2.0));
  EXPECT_EQ(proposition1_verdict(unstable, trivial_steady_state(unstable, 1.0)), Verdict::unstable_ineq1);
  const ModelSpec stable = preset("protest-negotiated", negotiated(2.0, 1.0));
  const VerdictDetail d = proposition1_detail(stable, trivial_steady_state(stable, 1.0));
  EXPECT_EQ(d.verdict, Verdict::stable);
  EXPECT_NEAR(d.ineq1_lhs, 2.0, 1e-12);
  EXPECT_NEAR(d.ineq1_rhs, 1.0, 1e-12);
}

TEST(Verdict, BullyingFlipsAtIneq1Equality) {
  const ModelSpec m = preset("bullying", kBullying);
  // Independent root of ubar(G) + G (1 + tanh ubar(G)) = Phi_B with ubar = 0.5 / (1 + G).
  auto gap = [](double G) {
    const double u = 0.5 / (1.0 + G);
    return u + G * (1.0 + std::tanh(u)) - 1.0;
  };
  double lo = 0.25, hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  const double g_star = 0.5 * (lo + hi);
  EXPECT_GT(g_star, 0.5);
  EXPECT_LT(g_star, 1.0);
  EXPECT_EQ(proposition1_verdict(m, trivial_steady_state(m, 1.0)), Verdict::stable);
  EXPECT_EQ(proposition1_verdict(m, trivial_steady_state(m, g_star * 1.001)), Verdict::stable);
  EXPECT_NE(proposition1_verdict(m, trivial_steady_state(m, g_star * 0.999)), Verdict::stable);
  EXPECT_NE(proposition1_verdict(m, trivial_steady_state(m, 0.5)), Verdict::stable);
  EXPECT_NE(proposition1_verdict(m, trivial_steady_state(m, 0.25)), Verdict::stable);
}

TEST(Verdict, ConsistentWithGrowthRates) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(0.2, 3.0);
  const GridSpec g = GridSpec::make(kPi, kPi, 32, 32);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelSpec m = preset("protest-negotiated", negotiated(U(rng), U(rng)));
    const SteadyState ss = trivial_steady_state(m, U(rng));
    double smax = -1e300;
    for (const GrowthRate& r : growth_rates(m, ss, default_k2_grid(g))) smax = std::max(smax, r.sigma_max);
    EXPECT_EQ(proposition1_verdict(m, ss) == Verdict::stable, smax < 0.0);
  }
}

TEST(Bounds, ExampleConstants) {
  const GridSpec g = GridSpec::make(kPi, kPi, 16, 16);
  const ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  HypothesisBounds hb;
  hb.A1 = 1.0;
  hb.B1 = 1.0;
  hb.A2 = 2.0;
  hb.B2 = 1.0;
  const State s0 = make_state(g, {1.0, 0.0, 1.0});
  const MassBounds b = theorem1_bounds(m, hb, s0, 1.0);
  EXPECT_NEAR(b.C3, kPi * kPi, 1e-12);
  EXPECT_NEAR(b.C2, 2.0 * kPi * kPi, 1e-12);
  EXPECT_NEAR(b.C1, 7.0 * kPi * kPi, 1e-12);
}

TEST(K2Grid, Contents) {
  const GridSpec g = GridSpec::make(kPi, kPi, 32, 32);
  const auto k2 = default_k2_grid(g);
  EXPECT_TRUE(std::is_sorted(k2.begin(), k2.end()));
  EXPECT_NEAR(k2.front(), 1e-3, 1e-15);
  EXPECT_NEAR(k2.back(), 4.0 * 32.0 * 32.0, 1e-9);
  for (double mode : {1.0, 2.0, 5.0, 128.0}) EXPECT_NE(std::find(k2.begin(), k2.end(), mode), k2.end()) << mode;
}

TEST(Report, NegotiatedDocument) {
  const GridSpec g = GridSpec::make(kPi, kPi, 32, 32);
  const ModelSpec m = preset("protest-negotiated", negotiated(1.0, 2.0));
  const StabilityReport r = analyze_stability(m, make_state(g, {1.0, 0.0, 1.0}));
  EXPECT_EQ(r.verdict.verdict, Verdict::unstable_ineq1);
  EXPECT_NEAR(r.sigma_max, 1.0, 1e-2);
  std::ostringstream os;
  write_report(os, r);
  const std::string doc = os.str();
  EXPECT_NE(doc.find("verdict: unstable-ineq1"), std::string::npos);
  const auto at = doc.find("ubar: ");
  ASSERT_NE(at, std::string::npos);
  EXPECT_NEAR(std::stod(doc.substr(at + 6)), 1.0, 1e-10);
  EXPECT_NE(doc.find("k2,sigma1"), std::string::npos);
}
