#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "tpg/error.hpp"
#include "tpg/model.hpp"

using namespace tpg;

namespace {

const ParamMap kNegotiated = {{"D_A", 0.1}, {"D_P", 0.1}, {"D_M", 0.1}, {"chi_P", 2.0}, {"chi_M", 1.0},
                              {"Phi_A", 1.0}, {"Phi_P", 2.0}, {"psi", 0.1}, {"Psi", 5.0}};
const ParamMap kBullying = {{"D_V", 0.05}, {"D_B", 0.05}, {"D_G", 0.05}, {"chi_B", 2.0},
                            {"chi_G", 2.0}, {"Phi_V", 0.5}, {"Phi_B", 1.0}, {"Psi", 10.0}};
const ParamMap kUrban = {{"D_A", 0.1}, {"D_rho", 0.1}, {"D_u", 0.1}, {"alpha", 1.0}, {"beta", 0.5}, {"chi", 1.0}};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tpg::Error thrown";
  return ErrorCode::Config;
}

State constant_state(const GridSpec& g, double u, double v, double w) {
  return State{Field(g, u), Field(g, v), Field(g, w), 0.0};
}

ModelSpec named(const std::string& name) {
  if (name == "bullying") return preset(name, kBullying);
  if (name == "urban-crime") return preset(name, kUrban);
  return preset(name, kNegotiated);
}

const std::array<std::string, 4> kConcrete = {"protest-negotiated", "protest-enhanced", "bullying", "urban-crime"};

}  // namespace

TEST(Preset, RulesMatchHandWrittenEquations) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.05, 4.0);
  for (const std::string& name : kConcrete) {
    const ModelSpec m = named(name);
    const oracle::PointModel o = oracle::point_model(name, m.params);
    EXPECT_DOUBLE_EQ(m.D_u, o.D[0]);
    EXPECT_DOUBLE_EQ(m.D_v, o.D[1]);
    EXPECT_DOUBLE_EQ(m.D_w, o.D[2]);
    EXPECT_DOUBLE_EQ(m.source, o.source);
    for (int k = 0; k < 200; ++k) {
      const double u = U(rng), v = U(rng), w = U(rng);
      const double tol = 1e-13;
      EXPECT_NEAR(m.f(u, v, w), o.f(u, v, w), tol) << name;
      EXPECT_NEAR(m.g1(u, v, w), o.g1(u, v, w), tol * std::max(1.0, std::abs(o.g1(u, v, w)))) << name;
      EXPECT_NEAR(m.g2(u, v, w), o.g2(u, v, w), tol) << name;
      EXPECT_NEAR(m.h1(u, v, w), o.h1(u), tol) << name;
      EXPECT_NEAR(m.h2(0.0, v, 0.0), o.h2(v), tol) << name;
      EXPECT_NEAR(m.chi1(u), o.chi1(u), tol) << name;
      EXPECT_NEAR(m.chi2(u), o.chi2(u), tol) << name;
    }
  }
}

TEST(Preset, Errors) {
  EXPECT_EQ(code_of([] { preset("nope", {}); }), ErrorCode::UnknownPreset);
  ParamMap missing = kNegotiated;
  missing.erase("Psi");
  EXPECT_EQ(code_of([&] { preset("protest-negotiated", missing); }), ErrorCode::MissingParam);
  const ParamMap general = {{"D_u", 1.0}, {"D_v", 1.0}, {"D_w", 1.0}};
  RuleTexts rules = {{"g1", "0"}, {"g2", "0"}, {"h1", "1 - u"}, {"h2", "1 - v"}, {"chi1", "1"}, {"chi2", "1"}};
  EXPECT_EQ(code_of([&] { preset("general", general, rules); }), ErrorCode::MissingParam);
  rules["f"] = "1";
  EXPECT_NO_THROW(preset("general", general, rules));
  rules["h1"] = "1 - u * v";  // h1 may depend on u only
  EXPECT_EQ(code_of([&] { preset("general", general, rules); }), ErrorCode::InvalidModel);
}

TEST(Preset, NonPositiveDiffusionNamesH1) {
  ParamMap p = kNegotiated;
  p["D_A"] = -0.1;
  try {
    preset("protest-negotiated", p);
    FAIL() << "accepted negative diffusion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidModel);
    EXPECT_NE(std::string(e.what()).find("H1"), std::string::npos);
  }
}

TEST(Rhs, ScalarOracleAtUnitState) {
  const ModelSpec m = preset("protest-negotiated", kNegotiated);
  const GridSpec g = GridSpec::make(std::numbers::pi, std::numbers::pi, 8, 8);
  const Derivative d = rhs(constant_state(g, 1.0, 1.0, 1.0), m);
  const double expected = 1.0 * (1.0 - 1.0 * (0.1 + 1.0) / (1.0 + std::exp(4.0))) + 1.0 - 1.0;
  EXPECT_NEAR(expected, 0.98019, 5e-5);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(d.u[k], expected, 1e-14);
}

TEST(Rhs, ConstantStateEqualsPointwiseOde) {
  const GridSpec g = GridSpec::make(2.0, 3.0, 6, 5);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (const std::string& name : kConcrete) {
    const ModelSpec m = named(name);
    const oracle::PointModel o = oracle::point_model(name, m.params);
    for (int k = 0; k < 20; ++k) {
      const double u = U(rng), v = U(rng), w = U(rng);
      const Derivative d = rhs(constant_state(g, u, v, w), m);
      const double f = o.f(u, v, w);
      const double du = u * (o.gamma * v * f - o.g1(u, v, w)) + o.h1(u);
      const double dv = v * (-u * f - o.g2(u, v, w) + o.h2(v)) + o.source;
      for (std::size_t c = 0; c < g.size(); ++c) {
        EXPECT_NEAR(d.u[c], du, 1e-12 * std::max(1.0, std::abs(du))) << name;
        EXPECT_NEAR(d.v[c], dv, 1e-12 * std::max(1.0, std::abs(dv))) << name;
        EXPECT_EQ(d.w[c], 0.0) << name;
      }
    }
  }
}

TEST(Rhs, VanishingPopulations) {
  const GridSpec g = GridSpec::make(std::numbers::pi, std::numbers::pi, 12, 12);
  const Field u = Field::from_function(g, [](double x, double y) { return 1.0 + 0.5 * std::cos(x) * std::cos(2 * y); });
  const Field some = Field::from_function(g, [](double x, double y) { return 1.0 + 0.3 * std::sin(x + y); });
  for (const std::string& name : kConcrete) {
    const ModelSpec m = named(name);
    const Derivative no_w = rhs(State{u, some, Field(g), 0.0}, m);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(no_w.w[k], 0.0) << name;
    if (m.source != 0.0) continue;  // the urban-crime influx feeds v even when v = 0
    const Derivative no_v = rhs(State{u, Field(g), some, 0.0}, m);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(no_v.v[k], 0.0) << name;
  }
}

TEST(Rhs, TrivialSteadyStateIsFixed) {
  const GridSpec g = GridSpec::make(std::numbers::pi, std::numbers::pi, 8, 8);
  // Bullying: ubar = Phi_V / (1 + wbar); negotiated: ubar = Phi_A.
  const Derivative b = rhs(constant_state(g, 0.25, 0.0, 1.0), named("bullying"));
  const Derivative n = rhs(constant_state(g, 1.0, 0.0, 1.0), named("protest-negotiated"));
  for (std::size_t k = 0; k < g.size(); ++k) {
    for (const Derivative* d : {&b, &n}) {
      EXPECT_LE(std::abs(d->u[k]), 1e-12);
      EXPECT_LE(std::abs(d->v[k]), 1e-12);
      EXPECT_LE(std::abs(d->w[k]), 1e-12);
    }
  }
}

TEST(Rhs, MatchesDenseOracle) {
  const GridSpec g = GridSpec::make(1.3, 0.9, 5, 7);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.1, 3.0);
  for (const std::string& name : kConcrete) {
    const ModelSpec m = named(name);
    const oracle::PointModel o = oracle::point_model(name, m.params);
    for (int trial = 0; trial < 10; ++trial) {
      State s = constant_state(g, 0.0, 0.0, 0.0);
      for (int c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < g.size(); ++k) s.component(c)[k] = U(rng);
      const Derivative got = rhs(s, m);
      const Derivative want = oracle::dense_rhs(s, o);
      for (int c = 0; c < 3; ++c)
        for (std::size_t k = 0; k < g.size(); ++k)
          EXPECT_NEAR(got.component(c)[k], want.component(c)[k], 1e-13 * std::max(1.0, std::abs(want.component(c)[k])))
              << name << " component " << c << " cell " << k;
    }
  }
}

TEST(Rhs, NonFiniteRhsNamesComponentAndCell) {
  const ParamMap general = {{"D_u", 1.0}, {"D_v", 1.0}, {"D_w", 1.0}};
  const RuleTexts rules = {{"f", "1"},      {"g1", "log(u - 1)"}, {"g2", "0"},   {"h1", "1 - u"},
                           {"h2", "1 - v"}, {"chi1", "0"},        {"chi2", "0"}};
  const ModelSpec m = preset("general", general, rules);
  const GridSpec g = GridSpec::make(1.0, 1.0, 4, 4);
  State s = constant_state(g, 2.0, 1.0, 1.0);
  s.u(2, 1) = 0.5;
  try {
    rhs(s, m);
    FAIL() << "expected NonFiniteRhs";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteRhs);
    EXPECT_NE(e.detail().find("cell=" + std::to_string(g.index(2, 1))), std::string::npos) << e.detail();
  }
}

TEST(Hypotheses, NegotiatedPasses) {
  const HypothesisReport r = hypothesis_check(named("protest-negotiated"));
  EXPECT_TRUE(r.passes());
  for (const auto& v : r.violations) ADD_FAILURE() << v.hypothesis << ' ' << v.rule << ' ' << v.message;
  EXPECT_DOUBLE_EQ(r.bounds.E1, 2.0);
  EXPECT_DOUBLE_EQ(r.bounds.E2, 1.0);
  EXPECT_NEAR(r.bounds.A1, 1.0, 1e-12);
  EXPECT_NEAR(r.bounds.B1, 1.0, 1e-12);
  EXPECT_NEAR(r.bounds.A2, 2.0, 1e-12);
  EXPECT_NEAR(r.bounds.B2, 1.0, 1e-12);
}

TEST(Hypotheses, EnhancedViolatesH5ForG1) {
  const HypothesisReport r = hypothesis_check(named("protest-enhanced"));
  EXPECT_TRUE(r.violates("H5"));
  bool g1 = false;
  for (const auto& v : r.violations) g1 = g1 || (v.hypothesis == "H5" && v.rule == "g1");
  EXPECT_TRUE(g1);
}

TEST(Hypotheses, UrbanCrimeViolatesH2) {
  const HypothesisReport r = hypothesis_check(named("urban-crime"));
  EXPECT_TRUE(r.violates("H2"));
}

TEST(Hypotheses, RejectsTooFewSamples) {
  EXPECT_EQ(code_of([] { hypothesis_check(named("bullying"), {}, 999); }), ErrorCode::Config);
}
