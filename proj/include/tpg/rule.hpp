#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tpg {

using ParamMap = std::map<std::string, double, std::less<>>;

enum class Var : std::uint8_t { u = 0, v = 1, w = 2 };

// Value of a rule together with its partial derivatives in (u, v, w).
struct RuleGradient {
  double value = 0.0;
  std::array<double, 3> partial{};

  double d(Var x) const { return partial[static_cast<std::size_t>(x)]; }
};

// A reaction, growth or taxis rate written in a small closed grammar:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | func '(' args ')' | '(' expr ')'
//
// Names resolve to the state variables u, v, w, the constant pi, or an entry
// of the parameter map (substituted at compile time). Functions: exp, log,
// sqrt, tanh, sigmoid (logistic 1/(1+e^-x)), inv_guard(x, eps) (1/x, NaN when
// x <= eps), inv_clamp(x, eps) (1/max(x, eps)).
//
// Rules compile to a postfix program. Scalar evaluation is exact forward-mode
// differentiation; batch evaluation runs the program over contiguous arrays.
class Rule {
 public:
  Rule();  // the constant 0
  static Rule constant(double value);
  // Throws Error{RuleParse} on syntax errors and Error{MissingParam} on an
  // unresolved name.
  static Rule parse(std::string_view text, const ParamMap& params = {});

  double operator()(double u, double v = 0.0, double w = 0.0) const;
  RuleGradient gradient(double u, double v = 0.0, double w = 0.0) const;

  // out[i] = rule(u[i], v[i], w[i]). Empty spans stand for an all-zero input.
  void evaluate(std::span<const double> u, std::span<const double> v, std::span<const double> w,
                std::span<double> out) const;
  // Same as evaluate() and also writes d rule / d x into dout.
  void evaluate_with_derivative(std::span<const double> u, std::span<const double> v,
                                std::span<const double> w, Var x, std::span<double> out,
                                std::span<double> dout) const;

  bool depends_on(Var x) const;
  bool is_constant() const { return uses_ == 0; }
  const std::string& text() const { return text_; }

  enum class Op : std::uint8_t {
    Const, LoadU, LoadV, LoadW,
    Add, Sub, Mul, Div, Pow, Neg,
    Exp, Log, Sqrt, Tanh, Sigmoid,
    InvGuard, InvClamp,
  };
  struct Instr {
    Op op;
    double value = 0.0;
  };

 private:
  std::string text_;
  std::vector<Instr> code_;
  std::size_t depth_ = 1;
  unsigned uses_ = 0;  // bit mask of referenced variables

  friend class RuleCompiler;
};

}  // namespace tpg
