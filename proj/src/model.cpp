#include "tpg/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "tpg/error.hpp"

namespace tpg {

namespace {

struct PresetTemplate {
  PresetInfo info;
  std::array<std::string, 3> diffusion;  // parameter names for D_u, D_v, D_w
  RuleTexts rules;
  std::array<std::string, 3> labels;
};

const std::vector<PresetTemplate>& templates() {
  static const std::vector<PresetTemplate> table = {
      {{"general", "general system; all seven rules supplied as expressions in u, v, w",
        {"D_u", "D_v", "D_w", "f", "g1", "g2", "h1", "h2", "chi1", "chi2"}, {"gamma"}},
       {"D_u", "D_v", "D_w"},
       {},
       {"u", "v", "w"}},
      {{"protest-negotiated", "protest propensity A, curious population P, negotiating management M",
        {"D_A", "D_P", "D_M", "chi_P", "chi_M", "Phi_A", "Phi_P", "psi", "Psi"}, {"gamma"}},
       {"D_A", "D_P", "D_M"},
       {{"f", "1"},
        {"g1", "v * (psi + w) / (1 + exp(-(v - Psi)))"},
        {"g2", "0"},
        {"h1", "Phi_A - u"},
        {"h2", "Phi_P - v"},
        {"chi1", "chi_P / (1 + u)"},
        {"chi2", "chi_M / (1 + u)"}},
       {"A", "P", "M"}},
      {{"protest-enhanced", "protest propensity A, curious population P, enhanced policing M",
        {"D_A", "D_P", "D_M", "chi_P", "chi_M", "Phi_A", "Phi_P", "psi", "Psi"}, {"gamma"}},
       {"D_A", "D_P", "D_M"},
       {{"f", "1 / (1 + v * (psi + w))"},
        {"g1", "-tanh(v * w - Psi)"},
        {"g2", "w"},
        {"h1", "Phi_A - u"},
        {"h2", "Phi_P - v"},
        {"chi1", "chi_P / (1 + u)"},
        {"chi2", "chi_M / (1 + u)"}},
       {"A", "P", "M"}},
      // The victimisation gain B (Psi - B) of V differs from the unit loss rate
      // of B, so f = 1 and the remainder of the V gain is carried by g1.
      {{"bullying", "victimisation V, bullies B, guardians G",
        {"D_V", "D_B", "D_G", "chi_B", "chi_G", "Phi_V", "Phi_B", "Psi"}, {"gamma"}},
       {"D_V", "D_B", "D_G"},
       {{"f", "1"},
        {"g1", "w - v * (Psi - 1 - v)"},
        {"g2", "w * (1 + tanh(u))"},
        {"h1", "Phi_V - u"},
        {"h2", "Phi_B - v"},
        {"chi1", "chi_B / (1 + u)"},
        {"chi2", "chi_G / (1 + u)"}},
       {"V", "B", "G"}},
      {{"urban-crime", "attractiveness A, burglars rho, police u; log-gradient taxis",
        {"D_A", "D_rho", "D_u", "alpha", "beta", "chi"}, {"guard", "clamp_guard"}},
       {"D_A", "D_rho", "D_u"},
       {{"f", "1"},
        {"g1", "0"},
        {"g2", "w"},
        {"h1", "alpha - u"},
        {"h2", "0"},
        {"chi1", "2 * inv_guard(u, guard)"},
        {"chi2", "chi * inv_guard(u, guard)"}},
       {"A", "rho", "u"}},
  };
  return table;
}

const PresetTemplate& find_template(std::string_view name) {
  for (const auto& t : templates())
    if (t.info.name == name) return t;
  throw Error(ErrorCode::UnknownPreset, "preset=" + std::string(name));
}

double require(const ParamMap& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw Error(ErrorCode::MissingParam, "param=" + key);
  return it->second;
}

}  // namespace

const PresetInfo& preset_info(std::string_view name) { return find_template(name).info; }

void ModelSpec::validate() const {
  const std::array<std::pair<const char*, double>, 4> checks = {
      {{"D_u", D_u}, {"D_v", D_v}, {"D_w", D_w}, {"gamma", gamma}}};
  for (const auto& [key, value] : checks) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      std::ostringstream os;
      os << "hypothesis=H1 param=" << key << " value=" << value;
      throw Error(ErrorCode::InvalidModel, os.str());
    }
  }
}

ModelSpec preset(std::string_view name, const ParamMap& params, const RuleTexts& rules) {
  const PresetTemplate& t = find_template(name);
  ModelSpec m;
  m.name = std::string(name);
  m.params = params;
  m.labels = t.labels;
  m.D_u = require(params, t.diffusion[0]);
  m.D_v = require(params, t.diffusion[1]);
  m.D_w = require(params, t.diffusion[2]);
  if (auto it = params.find("gamma"); it != params.end()) m.gamma = it->second;

  RuleTexts texts = t.rules;
  if (m.name == "general") {
    for (std::string_view r : kRuleNames) {
      const auto it = rules.find(r);
      if (it == rules.end()) throw Error(ErrorCode::MissingParam, "param=" + std::string(r));
      texts[std::string(r)] = it->second;
    }
  }
  if (m.name == "urban-crime") {
    require(params, "alpha");
    m.source = require(params, "beta");
    require(params, "chi");
    if (!params.contains("guard")) m.params["guard"] = 1e-6;
    if (auto it = params.find("clamp_guard"); it != params.end() && it->second != 0.0) {
      texts["chi1"] = "2 * inv_clamp(u, guard)";
      texts["chi2"] = "chi * inv_clamp(u, guard)";
    }
  }
  for (const auto& req : t.info.required) {
    if (m.name == "general") break;
    require(params, std::string(req));
  }

  auto compile = [&](const char* key) {
    try {
      return Rule::parse(texts.at(key), m.params);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MissingParam) throw Error(ErrorCode::MissingParam, e.detail() + " in=" + key);
      throw;
    }
  };
  m.f = compile("f");
  m.g1 = compile("g1");
  m.g2 = compile("g2");
  m.h1 = compile("h1");
  m.h2 = compile("h2");
  m.chi1 = compile("chi1");
  m.chi2 = compile("chi2");
  for (const auto& [key, rule] : std::array<std::pair<const char*, const Rule*>, 4>{
           {{"h1", &m.h1}, {"h2", &m.h2}, {"chi1", &m.chi1}, {"chi2", &m.chi2}}}) {
    const bool ok = std::string_view(key) == "h2" ? !rule->depends_on(Var::u) && !rule->depends_on(Var::w)
                                                  : !rule->depends_on(Var::v) && !rule->depends_on(Var::w);
    if (!ok) {
      throw Error(ErrorCode::InvalidModel,
                  std::string("rule=") + key + " reason=\"" +
                      (std::string_view(key) == "h2" ? "h2 may depend on v only" : "rule may depend on u only") +
                      "\"");
    }
  }
  m.rule_texts = std::move(texts);
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------

RhsEvaluator::RhsEvaluator(const ModelSpec& model, const GridSpec& grid, TaxisScheme scheme)
    : model_(model), grid_(grid), scheme_(scheme), div_(grid), lap_(grid) {
  const std::size_t n = grid.size();
  for (auto* b : {&f_, &g1_, &g2_, &h1_, &h2_, &df_, &dg_, &dh_}) b->resize(n);
}

void RhsEvaluator::explicit_terms(const State& s, Derivative& out) {
  const std::size_t n = grid_.size();
  for (int c = 0; c < 3; ++c)
    if (out.component(c).grid() != grid_) out.component(c) = Field(grid_);
  const auto u = s.u.values();
  const auto v = s.v.values();
  const auto w = s.w.values();
  model_.f.evaluate(u, v, w, f_);
  model_.g1.evaluate(u, v, w, g1_);
  model_.g2.evaluate(u, v, w, g2_);
  model_.h1.evaluate(u, {}, {}, h1_);
  model_.h2.evaluate({}, v, {}, h2_);
  const double gamma = model_.gamma;
  const double source = model_.source;
  auto du = out.u.values();
  auto dv = out.v.values();
  auto dw = out.w.values();
  for (std::size_t k = 0; k < n; ++k) {
    du[k] = u[k] * (gamma * v[k] * f_[k] - g1_[k]) + h1_[k];
    dv[k] = v[k] * (-u[k] * f_[k] - g2_[k] + h2_[k]) + source;
  }

  max_drift_ = 0.0;
  taxis_velocity(s.u, model_.chi1, vel_, scratch_);
  max_drift_ = std::max(max_drift_, vel_.max_abs());
  flux_divergence(s.v, vel_, scheme_, div_);
  for (std::size_t k = 0; k < n; ++k) dv[k] -= div_[k];

  taxis_velocity(s.u, model_.chi2, vel_, scratch_);
  max_drift_ = std::max(max_drift_, vel_.max_abs());
  flux_divergence(s.w, vel_, scheme_, div_);
  for (std::size_t k = 0; k < n; ++k) dw[k] = -div_[k];
  check(out, s.t);
}

void RhsEvaluator::evaluate(const State& s, Derivative& out) {
  explicit_terms(s, out);
  const std::array<double, 3> d = {model_.D_u, model_.D_v, model_.D_w};
  for (int c = 0; c < 3; ++c) {
    laplacian(s.component(c), lap_);
    auto o = out.component(c).values();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] += d[static_cast<std::size_t>(c)] * lap_[k];
  }
  check(out, s.t);
}

double RhsEvaluator::estimate_reaction_rate(const State& s) {
  const auto u = s.u.values();
  const auto v = s.v.values();
  const auto w = s.w.values();
  const std::size_t n = grid_.size();
  double rate = 0.0;
  // d/du [u (gamma v f - g1) + h1(u)]
  model_.f.evaluate_with_derivative(u, v, w, Var::u, f_, df_);
  model_.g1.evaluate_with_derivative(u, v, w, Var::u, g1_, dg_);
  model_.h1.evaluate_with_derivative(u, {}, {}, Var::u, h1_, dh_);
  for (std::size_t k = 0; k < n; ++k) {
    const double j = model_.gamma * v[k] * f_[k] - g1_[k] + u[k] * (model_.gamma * v[k] * df_[k] - dg_[k]) + dh_[k];
    rate = std::max(rate, std::abs(j));
  }
  // d/dv [v (-u f - g2 + h2(v))]
  model_.f.evaluate_with_derivative(u, v, w, Var::v, f_, df_);
  model_.g2.evaluate_with_derivative(u, v, w, Var::v, g2_, dg_);
  model_.h2.evaluate_with_derivative({}, v, {}, Var::v, h2_, dh_);
  for (std::size_t k = 0; k < n; ++k) {
    const double j = -u[k] * f_[k] - g2_[k] + h2_[k] + v[k] * (-u[k] * df_[k] - dg_[k] + dh_[k]);
    rate = std::max(rate, std::abs(j));
  }
  return std::isfinite(rate) ? rate : 0.0;
}

void RhsEvaluator::check(const Derivative& out, double t) const {
  for (int c = 0; c < 3; ++c) {
    const std::size_t k = out.component(c).first_non_finite();
    if (k != out.component(c).size()) {
      std::ostringstream os;
      os << "component=" << model_.labels[static_cast<std::size_t>(c)] << " cell=" << k << " time=" << t;
      throw Error(ErrorCode::NonFiniteRhs, os.str());
    }
  }
}

Derivative rhs(const State& s, const ModelSpec& m, TaxisScheme scheme) {
  RhsEvaluator eval(m, s.grid(), scheme);
  Derivative out{Field(s.grid()), Field(s.grid()), Field(s.grid())};
  eval.evaluate(s, out);
  return out;
}

// ---------------------------------------------------------------------------

bool HypothesisReport::violates(std::string_view hypothesis) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.hypothesis == hypothesis; });
}

namespace {

class ViolationLog {
 public:
  explicit ViolationLog(std::vector<Violation>& out) : out_(out) {}

  // Keeps the first offending point per (hypothesis, rule) and counts the rest.
  void add(const std::string& hyp, const std::string& rule, const std::array<double, 3>& p, double value,
           const std::string& what) {
    const std::string key = hyp + "/" + rule;
    auto& count = counts_[key];
    if (count++ == 0) {
      index_[key] = out_.size();
      out_.push_back({hyp, rule, p, value, what});
    }
  }

  void finish() {
    for (const auto& [key, count] : counts_) {
      if (count > 1) out_[index_[key]].message += " (" + std::to_string(count) + " sampled points)";
    }
  }

 private:
  std::vector<Violation>& out_;
  std::map<std::string, int> counts_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace

HypothesisReport hypothesis_check(const ModelSpec& m, const Box& box, int samples) {
  if (samples < 1000) throw Error(ErrorCode::Config, "reason=\"hypothesis_check needs at least 1000 samples\"");
  HypothesisReport report;
  ViolationLog log(report.violations);
  const std::array<double, 3> origin{};

  for (const auto& [key, value] : std::array<std::pair<const char*, double>, 4>{
           {{"D_u", m.D_u}, {"D_v", m.D_v}, {"D_w", m.D_w}, {"gamma", m.gamma}}}) {
    if (!(value > 0.0)) log.add("H1", key, origin, value, "parameter must be positive");
  }
  if (m.source != 0.0) {
    log.add("H3", "source", origin, m.source, "constant partaker influx lies outside the v h2(v) growth form");
  }

  // Corners first, then uniform points from a fixed seed.
  std::vector<std::array<double, 3>> pts;
  for (int c = 0; c < 8; ++c) pts.push_back({box.u[c & 1], box.v[(c >> 1) & 1], box.w[(c >> 2) & 1]});
  std::mt19937_64 rng(0x7e57u);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  for (int k = 0; k < samples; ++k) {
    const double a = unit(), b = unit(), c = unit();
    pts.push_back({box.u[0] + a * (box.u[1] - box.u[0]), box.v[0] + b * (box.v[1] - box.v[0]),
                   box.w[0] + c * (box.w[1] - box.w[0])});
  }

  auto finite_or_log = [&](const std::string& hyp, const char* rule, const RuleGradient& g,
                           const std::array<double, 3>& p) {
    const bool ok = std::isfinite(g.value) && std::isfinite(g.partial[0]) && std::isfinite(g.partial[1]) &&
                    std::isfinite(g.partial[2]);
    if (!ok) log.add(hyp, rule, p, g.value, "rule or its derivative is not finite");
    return ok;
  };

  // (H2) taxis bounds, (H3) saturated growth, (H4) smoothness.
  double e1 = 0.0, e2 = 0.0;
  for (const auto& p : pts) {
    const RuleGradient c1 = m.chi1.gradient(p[0]);
    const RuleGradient c2 = m.chi2.gradient(p[0]);
    if (finite_or_log("H2", "chi1", c1, p)) e1 = std::max(e1, std::abs(c1.value));
    if (finite_or_log("H2", "chi2", c2, p)) e2 = std::max(e2, std::abs(c2.value));
  }
  report.bounds.E1 = e1;
  report.bounds.E2 = e2;

  auto growth_bound = [&](const Rule& h, const char* name, std::array<double, 2> range, double& A, double& B,
                          int axis) {
    auto at = [&](double s) {
      std::array<double, 3> x{};
      x[static_cast<std::size_t>(axis)] = s;
      return h.gradient(x[0], x[1], x[2]);
    };
    const double lo = range[0], hi = range[1];
    const double slope = (at(hi).value - at(lo).value) / (hi - lo);
    B = -slope;
    A = -std::numeric_limits<double>::infinity();
    bool finite = true;
    for (const auto& p : pts) {
      const double s = p[static_cast<std::size_t>(axis)];
      const RuleGradient g = at(s);
      if (!finite_or_log("H4", name, g, p)) {
        finite = false;
        continue;
      }
      A = std::max(A, g.value + B * s);
    }
    if (!finite) return;
    if (!(B > 0.0)) {
      log.add("H3", name, origin, B, "no decreasing linear bound: secant slope over the box is not negative");
    } else if (!(A > 0.0)) {
      log.add("H3", name, origin, A, "intercept of the linear bound is not positive");
    }
  };
  growth_bound(m.h1, "h1", box.u, report.bounds.A1, report.bounds.B1, 0);
  growth_bound(m.h2, "h2", box.v, report.bounds.A2, report.bounds.B2, 1);

  // (H5) nonnegative victimisation and control, (H6) controlled victimisation.
  double F = 0.0;
  for (const auto& p : pts) {
    const RuleGradient f = m.f.gradient(p[0], p[1], p[2]);
    const RuleGradient g1 = m.g1.gradient(p[0], p[1], p[2]);
    const RuleGradient g2 = m.g2.gradient(p[0], p[1], p[2]);
    const bool ok = finite_or_log("H4", "f", f, p) & finite_or_log("H4", "g1", g1, p) &
                    finite_or_log("H4", "g2", g2, p);
    if (!ok) continue;
    constexpr double tol = -1e-14;
    if (f.value < tol) log.add("H5", "f", p, f.value, "f is negative");
    if (g1.value < tol) log.add("H5", "g1", p, g1.value, "g1 is negative");
    if (g2.value < tol) log.add("H5", "g2", p, g2.value, "g2 is negative");
    F = std::max(F, m.gamma * p[1] * f.value - g1.value);
  }
  report.bounds.F = F;
  log.finish();
  return report;
}

}  // namespace tpg
