#include "tpg/rule.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "tpg/error.hpp"

namespace tpg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

unsigned arity(Rule::Op op) {
  using Op = Rule::Op;
  switch (op) {
    case Op::Const:
    case Op::LoadU:
    case Op::LoadV:
    case Op::LoadW: return 0;
    case Op::Neg:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Tanh:
    case Op::Sigmoid: return 1;
    default: return 2;
  }
}

// Forward-mode number carrying the three partials.
struct Dual {
  double x = 0.0;
  std::array<double, 3> d{};
};

Dual apply(Rule::Op op, const Dual& a, const Dual& b) {
  using Op = Rule::Op;
  Dual r;
  auto chain = [&](double value, double da) {
    r.x = value;
    for (int k = 0; k < 3; ++k) r.d[k] = da * a.d[k];
  };
  switch (op) {
    case Op::Add:
      r.x = a.x + b.x;
      for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] + b.d[k];
      break;
    case Op::Sub:
      r.x = a.x - b.x;
      for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] - b.d[k];
      break;
    case Op::Mul:
      r.x = a.x * b.x;
      for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * b.x + a.x * b.d[k];
      break;
    case Op::Div:
      r.x = a.x / b.x;
      for (int k = 0; k < 3; ++k) r.d[k] = (a.d[k] - r.x * b.d[k]) / b.x;
      break;
    case Op::Pow: {
      r.x = std::pow(a.x, b.x);
      const bool const_exp = b.d[0] == 0.0 && b.d[1] == 0.0 && b.d[2] == 0.0;
      for (int k = 0; k < 3; ++k) {
        double dk = b.x * std::pow(a.x, b.x - 1.0) * a.d[k];
        if (!const_exp) dk += r.x * std::log(a.x) * b.d[k];
        r.d[k] = (a.d[k] == 0.0 && (const_exp || b.d[k] == 0.0)) ? 0.0 : dk;
      }
      break;
    }
    case Op::Neg: chain(-a.x, -1.0); break;
    case Op::Exp: {
      const double e = std::exp(a.x);
      chain(e, e);
      break;
    }
    case Op::Log: chain(std::log(a.x), 1.0 / a.x); break;
    case Op::Sqrt: {
      const double s = std::sqrt(a.x);
      chain(s, 0.5 / s);
      break;
    }
    case Op::Tanh: {
      const double t = std::tanh(a.x);
      chain(t, 1.0 - t * t);
      break;
    }
    case Op::Sigmoid: {
      const double s = sigmoid(a.x);
      chain(s, s * (1.0 - s));
      break;
    }
    case Op::InvGuard:
      if (a.x <= b.x) {
        r.x = kNaN;
        r.d.fill(kNaN);
      } else {
        chain(1.0 / a.x, -1.0 / (a.x * a.x));
      }
      break;
    case Op::InvClamp:
      if (a.x <= b.x) {
        r.x = 1.0 / b.x;
      } else {
        chain(1.0 / a.x, -1.0 / (a.x * a.x));
      }
      break;
    default: break;
  }
  return r;
}

double apply(Rule::Op op, double a, double b) {
  using Op = Rule::Op;
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    case Op::Neg: return -a;
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sqrt: return std::sqrt(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Sigmoid: return sigmoid(a);
    case Op::InvGuard: return a <= b ? kNaN : 1.0 / a;
    case Op::InvClamp: return 1.0 / std::max(a, b);
    default: return kNaN;
  }
}

}  // namespace

class RuleCompiler {
 public:
  RuleCompiler(std::string_view text, const ParamMap& params) : text_(text), params_(params) {}

  Rule compile() {
    Rule rule;
    rule.text_ = std::string(text_);
    out_ = &rule;
    rule.code_.clear();
    skip_ws();
    if (pos_ == text_.size()) fail("empty rule");
    expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    rule.depth_ = std::max<std::size_t>(max_depth_, 1);
    return rule;
  }

 private:
  std::string_view text_;
  const ParamMap& params_;
  std::size_t pos_ = 0;
  Rule* out_ = nullptr;
  std::size_t depth_ = 0;
  std::size_t max_depth_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::RuleParse,
                "rule=\"" + std::string(text_) + "\" pos=" + std::to_string(pos_) + " reason=\"" + what + "\"");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  void emit(Rule::Op op, double value = 0.0) {
    auto& code = out_->code_;
    const unsigned n = arity(op);
    // Fold operations whose operands are all constants.
    if (n > 0 && code.size() >= n &&
        std::all_of(code.end() - n, code.end(), [](const Rule::Instr& i) { return i.op == Rule::Op::Const; })) {
      const double a = code[code.size() - n].value;
      const double b = n == 2 ? code.back().value : 0.0;
      code.resize(code.size() - n);
      depth_ -= n;
      push_const(apply(op, a, b));
      return;
    }
    code.push_back({op, value});
    if (n == 0) {
      ++depth_;
      max_depth_ = std::max(max_depth_, depth_);
    } else {
      depth_ -= n - 1;
    }
    if (op == Rule::Op::LoadU) out_->uses_ |= 1u;
    if (op == Rule::Op::LoadV) out_->uses_ |= 2u;
    if (op == Rule::Op::LoadW) out_->uses_ |= 4u;
  }

  void push_const(double value) {
    out_->code_.push_back({Rule::Op::Const, value});
    ++depth_;
    max_depth_ = std::max(max_depth_, depth_);
  }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit(Rule::Op::Add);
      } else if (accept('-')) {
        term();
        emit(Rule::Op::Sub);
      } else {
        return;
      }
    }
  }

  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit(Rule::Op::Mul);
      } else if (accept('/')) {
        unary();
        emit(Rule::Op::Div);
      } else {
        return;
      }
    }
  }

  void unary() {
    if (accept('-')) {
      unary();
      emit(Rule::Op::Neg);
      return;
    }
    accept('+');
    power();
  }

  void power() {
    primary();
    if (accept('^')) {
      unary();
      emit(Rule::Op::Pow);
    }
  }

  void primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of rule");
    const char c = text_[pos_];
    if (accept('(')) {
      expr();
      expect(')');
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      name();
      return;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  void number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    const std::string token(text_.substr(start, pos_ - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      fail("bad number '" + token + "'");
    }
    if (used != token.size()) fail("bad number '" + token + "'");
    push_const(value);
  }

  void name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string id(text_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      call(id);
      return;
    }
    if (id == "u") return emit(Rule::Op::LoadU);
    if (id == "v") return emit(Rule::Op::LoadV);
    if (id == "w") return emit(Rule::Op::LoadW);
    if (auto it = params_.find(id); it != params_.end()) return push_const(it->second);
    if (id == "pi") return push_const(std::numbers::pi);
    throw Error(ErrorCode::MissingParam, "param=" + id + " rule=\"" + std::string(text_) + "\"");
  }

  void call(const std::string& fn) {
    static const std::map<std::string, std::pair<Rule::Op, unsigned>, std::less<>> table = {
        {"exp", {Rule::Op::Exp, 1}},           {"log", {Rule::Op::Log, 1}},
        {"sqrt", {Rule::Op::Sqrt, 1}},         {"tanh", {Rule::Op::Tanh, 1}},
        {"sigmoid", {Rule::Op::Sigmoid, 1}},   {"inv_guard", {Rule::Op::InvGuard, 2}},
        {"inv_clamp", {Rule::Op::InvClamp, 2}},
    };
    const auto it = table.find(fn);
    if (it == table.end()) fail("unknown function '" + fn + "'");
    expect('(');
    expr();
    for (unsigned k = 1; k < it->second.second; ++k) {
      expect(',');
      expr();
    }
    expect(')');
    emit(it->second.first);
  }
};

Rule::Rule() : text_("0"), code_{{Op::Const, 0.0}} {}

Rule Rule::constant(double value) {
  Rule r;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  r.text_ = buf;
  r.code_ = {{Op::Const, value}};
  return r;
}

Rule Rule::parse(std::string_view text, const ParamMap& params) {
  return RuleCompiler(text, params).compile();
}

bool Rule::depends_on(Var x) const { return (uses_ >> static_cast<unsigned>(x)) & 1u; }

double Rule::operator()(double u, double v, double w) const {
  double stack[32] = {};
  std::vector<double> heap;
  double* s = stack;
  if (depth_ > 32) {
    heap.resize(depth_);
    s = heap.data();
  }
  std::size_t top = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: s[top++] = in.value; break;
      case Op::LoadU: s[top++] = u; break;
      case Op::LoadV: s[top++] = v; break;
      case Op::LoadW: s[top++] = w; break;
      default:
        if (arity(in.op) == 1) {
          s[top - 1] = apply(in.op, s[top - 1], 0.0);
        } else {
          s[top - 2] = apply(in.op, s[top - 2], s[top - 1]);
          --top;
        }
    }
  }
  return s[0];
}

RuleGradient Rule::gradient(double u, double v, double w) const {
  std::vector<Dual> s(depth_);
  std::size_t top = 0;
  auto load = [&](double x, int k) {
    Dual d;
    d.x = x;
    if (k >= 0) d.d[static_cast<std::size_t>(k)] = 1.0;
    s[top++] = d;
  };
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::Const: load(in.value, -1); break;
      case Op::LoadU: load(u, 0); break;
      case Op::LoadV: load(v, 1); break;
      case Op::LoadW: load(w, 2); break;
      default:
        if (arity(in.op) == 1) {
          s[top - 1] = apply(in.op, s[top - 1], Dual{});
        } else {
          s[top - 2] = apply(in.op, s[top - 2], s[top - 1]);
          --top;
        }
    }
  }
  return {s[0].x, s[0].d};
}

namespace {

constexpr std::size_t kChunk = 256;

double load_at(std::span<const double> x, std::size_t i) { return x.empty() ? 0.0 : x[i]; }

}  // namespace

void Rule::evaluate(std::span<const double> u, std::span<const double> v, std::span<const double> w,
                    std::span<double> out) const {
  const std::size_t n = out.size();
  if (code_.size() == 1 && code_[0].op == Op::Const) {
    std::fill(out.begin(), out.end(), code_[0].value);
    return;
  }
  std::vector<double> buf(depth_ * kChunk);
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t m = std::min(kChunk, n - base);
    std::size_t top = 0;
    for (const Instr& in : code_) {
      if (arity(in.op) == 0) {
        double* dst = &buf[top * kChunk];
        std::span<const double> src = in.op == Op::LoadU ? u : in.op == Op::LoadV ? v : w;
        if (in.op == Op::Const) {
          std::fill(dst, dst + m, in.value);
        } else {
          for (std::size_t i = 0; i < m; ++i) dst[i] = load_at(src, base + i);
        }
        ++top;
        continue;
      }
      if (arity(in.op) == 1) {
        double* a = &buf[(top - 1) * kChunk];
        switch (in.op) {
          case Op::Neg: for (std::size_t i = 0; i < m; ++i) a[i] = -a[i]; break;
          case Op::Exp: for (std::size_t i = 0; i < m; ++i) a[i] = std::exp(a[i]); break;
          case Op::Tanh: for (std::size_t i = 0; i < m; ++i) a[i] = std::tanh(a[i]); break;
          default: for (std::size_t i = 0; i < m; ++i) a[i] = apply(in.op, a[i], 0.0);
        }
        continue;
      }
      double* a = &buf[(top - 2) * kChunk];
      const double* b = &buf[(top - 1) * kChunk];
      switch (in.op) {
        case Op::Add: for (std::size_t i = 0; i < m; ++i) a[i] += b[i]; break;
        case Op::Sub: for (std::size_t i = 0; i < m; ++i) a[i] -= b[i]; break;
        case Op::Mul: for (std::size_t i = 0; i < m; ++i) a[i] *= b[i]; break;
        case Op::Div: for (std::size_t i = 0; i < m; ++i) a[i] /= b[i]; break;
        default: for (std::size_t i = 0; i < m; ++i) a[i] = apply(in.op, a[i], b[i]);
      }
      --top;
    }
    std::copy(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(m), out.begin() + static_cast<std::ptrdiff_t>(base));
  }
}

void Rule::evaluate_with_derivative(std::span<const double> u, std::span<const double> v,
                                    std::span<const double> w, Var x, std::span<double> out,
                                    std::span<double> dout) const {
  const std::size_t n = out.size();
  const Op seed = x == Var::u ? Op::LoadU : x == Var::v ? Op::LoadV : Op::LoadW;
  // Value and tangent stacks; the tangent rides in Dual::d[0].
  std::vector<double> val(depth_ * kChunk);
  std::vector<double> tan(depth_ * kChunk);
  for (std::size_t base = 0; base < n; base += kChunk) {
    const std::size_t m = std::min(kChunk, n - base);
    std::size_t top = 0;
    for (const Instr& in : code_) {
      const unsigned na = arity(in.op);
      if (na == 0) {
        double* a = &val[top * kChunk];
        double* ta = &tan[top * kChunk];
        std::span<const double> src = in.op == Op::LoadU ? u : in.op == Op::LoadV ? v : w;
        for (std::size_t i = 0; i < m; ++i) {
          a[i] = in.op == Op::Const ? in.value : load_at(src, base + i);
          ta[i] = in.op == seed ? 1.0 : 0.0;
        }
        ++top;
        continue;
      }
      double* a = &val[(top - na) * kChunk];
      double* ta = &tan[(top - na) * kChunk];
      const double* b = na == 2 ? &val[(top - 1) * kChunk] : nullptr;
      const double* tb = na == 2 ? &tan[(top - 1) * kChunk] : nullptr;
      for (std::size_t i = 0; i < m; ++i) {
        Dual da{a[i], {ta[i], 0.0, 0.0}};
        Dual db = b ? Dual{b[i], {tb[i], 0.0, 0.0}} : Dual{};
        const Dual r = apply(in.op, da, db);
        a[i] = r.x;
        ta[i] = r.d[0];
      }
      top -= na - 1;
    }
    std::copy(val.begin(), val.begin() + static_cast<std::ptrdiff_t>(m), out.begin() + static_cast<std::ptrdiff_t>(base));
    std::copy(tan.begin(), tan.begin() + static_cast<std::ptrdiff_t>(m), dout.begin() + static_cast<std::ptrdiff_t>(base));
  }
}

}  // namespace tpg
