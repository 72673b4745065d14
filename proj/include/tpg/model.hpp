#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tpg/grid.hpp"
#include "tpg/rule.hpp"

namespace tpg {

using RuleTexts = std::map<std::string, std::string, std::less<>>;

// The target-partaker-guardian system
//
//   u_t = D_u lap u + u (gamma v f - g1) + h1(u)
//   v_t = D_v lap v - div(v chi1(u) grad u) + v (-u f - g2 + h2(v)) + source
//   w_t = D_w lap w - div(w chi2(u) grad u)
//
// with homogeneous Neumann boundaries. `source` is zero except for the
// urban-crime preset, whose partaker equation has a constant influx.
struct ModelSpec {
  std::string name;
  double D_u = 1.0;
  double D_v = 1.0;
  double D_w = 1.0;
  double gamma = 1.0;
  double source = 0.0;
  Rule f, g1, g2;
  Rule h1, h2;
  Rule chi1, chi2;
  ParamMap params;
  RuleTexts rule_texts;  // the rule sources as compiled, keyed by rule name
  std::array<std::string, 3> labels{"u", "v", "w"};

  // Throws Error{InvalidModel} naming H1 when a diffusion coefficient or gamma
  // is not positive.
  void validate() const;
};

inline constexpr std::array<std::string_view, 5> kPresetNames = {
    "general", "protest-negotiated", "protest-enhanced", "bullying", "urban-crime"};

inline constexpr std::array<std::string_view, 7> kRuleNames = {"f", "g1", "g2", "h1", "h2", "chi1", "chi2"};

struct PresetInfo {
  std::string_view name;
  std::string_view summary;
  std::vector<std::string_view> required;  // parameter names
  std::vector<std::string_view> optional;
};

const PresetInfo& preset_info(std::string_view name);

// Throws Error{UnknownPreset}, Error{MissingParam} or Error{InvalidModel}.
// `rules` is consulted only by the general preset, which needs all seven.
ModelSpec preset(std::string_view name, const ParamMap& params, const RuleTexts& rules = {});

struct State {
  Field u, v, w;
  double t = 0.0;

  const GridSpec& grid() const { return u.grid(); }
  Field& component(int c) { return c == 0 ? u : c == 1 ? v : w; }
  const Field& component(int c) const { return c == 0 ? u : c == 1 ? v : w; }
};

struct Derivative {
  Field u, v, w;

  Field& component(int c) { return c == 0 ? u : c == 1 ? v : w; }
  const Field& component(int c) const { return c == 0 ? u : c == 1 ? v : w; }
};

// Reusable evaluator of the semi-discrete right-hand side. Holds scratch
// buffers, so one instance must not be shared between threads.
class RhsEvaluator {
 public:
  RhsEvaluator(const ModelSpec& model, const GridSpec& grid, TaxisScheme scheme = TaxisScheme::upwind);

  // Full right-hand side. Throws Error{NonFiniteRhs} or Error{NonFiniteFlux}.
  void evaluate(const State& s, Derivative& out);
  // Reaction and taxis terms only (everything but D lap).
  void explicit_terms(const State& s, Derivative& out);

  // Largest taxis drift speed and reaction self-rate seen in the last call
  // to explicit_terms() / estimate_reaction_rate().
  double max_drift() const { return max_drift_; }
  double estimate_reaction_rate(const State& s);

  const ModelSpec& model() const { return model_; }

 private:
  const ModelSpec& model_;
  GridSpec grid_;
  TaxisScheme scheme_;
  std::vector<double> f_, g1_, g2_, h1_, h2_, df_, dg_, dh_, scratch_;
  FaceVelocity vel_;
  Field div_, lap_;
  double max_drift_ = 0.0;

  void check(const Derivative& out, double t) const;
};

Derivative rhs(const State& s, const ModelSpec& m, TaxisScheme scheme = TaxisScheme::upwind);

struct Box {
  std::array<double, 2> u{0.0, 10.0};
  std::array<double, 2> v{0.0, 10.0};
  std::array<double, 2> w{0.0, 10.0};
};

struct HypothesisBounds {
  double E1 = 0.0, E2 = 0.0;
  double A1 = 0.0, B1 = 0.0;
  double A2 = 0.0, B2 = 0.0;
  double F = 0.0;
};

struct Violation {
  std::string hypothesis;  // "H1" .. "H6"
  std::string rule;
  std::array<double, 3> point{};
  double value = 0.0;
  std::string message;
};

struct HypothesisReport {
  HypothesisBounds bounds;
  std::vector<Violation> violations;

  bool passes() const { return violations.empty(); }
  bool violates(std::string_view hypothesis) const;
};

// Samples the rules on `box` (corners plus `samples` pseudo-random points
// from a fixed seed). Throws Error{Config} when samples < 1000.
HypothesisReport hypothesis_check(const ModelSpec& m, const Box& box = {}, int samples = 4096);

}  // namespace tpg
