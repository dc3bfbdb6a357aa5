#include "tsvar/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "tsvar/errors.hpp"

namespace tsvar {

struct Expression::Node {
  NodeKind kind;
  double value = 0.0;       // Constant
  std::string name;         // Variable
  double exponent = 0.0;    // Pow
  NodePtr a, b;
};

Expression::Expression(NodePtr node) : node_(std::move(node)) {}

Expression::Expression() : Expression(constant(0.0)) {}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  n->name = std::move(name);
  return Expression(std::move(n));
}

Expression Expression::raw(NodeKind kind, Expression a, Expression b) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->a = std::move(a.node_);
  n->b = std::move(b.node_);
  return Expression(std::move(n));
}

Expression Expression::raw_pow(Expression base, double exponent) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Pow;
  n->exponent = exponent;
  n->a = std::move(base.node_);
  return Expression(std::move(n));
}

bool Expression::is_constant(double value) const {
  return node_->kind == NodeKind::Constant && node_->value == value;
}

namespace {

bool finite_const(const Expression& e, double* out) {
  if (e.kind() != NodeKind::Constant) return false;
  *out = e.constant_value();
  return std::isfinite(*out);
}

}  // namespace

Expression Expression::add(Expression a, Expression b) {
  double x, y;
  if (finite_const(a, &x) && finite_const(b, &y) && std::isfinite(x + y))
    return constant(x + y);
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return raw(NodeKind::Add, std::move(a), std::move(b));
}

Expression Expression::sub(Expression a, Expression b) {
  double x, y;
  if (finite_const(a, &x) && finite_const(b, &y) && std::isfinite(x - y))
    return constant(x - y);
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return neg(std::move(b));
  return raw(NodeKind::Sub, std::move(a), std::move(b));
}

Expression Expression::mul(Expression a, Expression b) {
  double x, y;
  if (finite_const(a, &x) && finite_const(b, &y) && std::isfinite(x * y))
    return constant(x * y);
  if (a.is_constant(0.0) || b.is_constant(0.0)) return constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return raw(NodeKind::Mul, std::move(a), std::move(b));
}

Expression Expression::div(Expression a, Expression b) {
  double x, y;
  if (finite_const(a, &x) && finite_const(b, &y) && y != 0.0 &&
      std::isfinite(x / y))
    return constant(x / y);
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(0.0) && !b.is_constant(0.0)) return constant(0.0);
  return raw(NodeKind::Div, std::move(a), std::move(b));
}

Expression Expression::neg(Expression a) {
  double x;
  if (finite_const(a, &x)) return constant(-x);
  if (a.kind() == NodeKind::Neg) return a.child(0);
  return raw(NodeKind::Neg, std::move(a), Expression(nullptr));
}

Expression Expression::pow(Expression base, double exponent) {
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return base;
  double x;
  if (finite_const(base, &x)) {
    const double v = std::pow(x, exponent);
    if (std::isfinite(v)) return constant(v);
  }
  return raw_pow(std::move(base), exponent);
}

Expression Expression::apply(NodeKind fn, Expression arg) {
  return raw(fn, std::move(arg), Expression(nullptr));
}

NodeKind Expression::kind() const { return node_->kind; }
double Expression::constant_value() const { return node_->value; }
const std::string& Expression::variable_name() const { return node_->name; }
double Expression::exponent() const { return node_->exponent; }

Expression Expression::child(int index) const {
  return Expression(index == 0 ? node_->a : node_->b);
}

// ---------------------------------------------------------------------------
// Bindings

Bindings::Bindings(std::initializer_list<std::pair<std::string, double>> init) {
  for (auto& kv : init) set(kv.first, kv.second);
}

void Bindings::set(std::string name, double value) {
  for (auto& slot : slots_) {
    if (slot.first == name) {
      slot.second = value;
      return;
    }
  }
  slots_.emplace_back(std::move(name), value);
}

std::optional<double> Bindings::get(std::string_view name) const {
  for (const auto& slot : slots_) {
    if (slot.first == name) return slot.second;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

bool is_integer_exponent(double e) {
  return e == std::rint(e) && std::abs(e) <= 1e9;
}

// Integer powers expand multiplicatively (exponentiation by squaring),
// so negative bases are fine and no pow() rounding surprises enter the
// residual chains.
double int_pow(double base, long long n) {
  if (n < 0) return 1.0 / int_pow(base, -n);
  double result = 1.0;
  double acc = base;
  while (n > 0) {
    if (n & 1) result *= acc;
    acc *= acc;
    n >>= 1;
  }
  return result;
}

[[noreturn]] void eval_fail(const Expression& e, const std::string& reason) {
  throw EvalError("evaluation error: " + reason + " in '" + e.str() + "'");
}

}  // namespace

double Expression::evaluate(const Bindings& bindings) const {
  switch (kind()) {
    case NodeKind::Constant:
      return constant_value();
    case NodeKind::Variable: {
      auto v = bindings.get(variable_name());
      if (!v) eval_fail(*this, "unbound variable '" + variable_name() + "'");
      return *v;
    }
    case NodeKind::Add:
      return child(0).evaluate(bindings) + child(1).evaluate(bindings);
    case NodeKind::Sub:
      return child(0).evaluate(bindings) - child(1).evaluate(bindings);
    case NodeKind::Mul:
      return child(0).evaluate(bindings) * child(1).evaluate(bindings);
    case NodeKind::Div: {
      const double num = child(0).evaluate(bindings);
      const double den = child(1).evaluate(bindings);
      if (den == 0.0) eval_fail(*this, "division by zero");
      return num / den;
    }
    case NodeKind::Neg:
      return -child(0).evaluate(bindings);
    case NodeKind::Pow: {
      const double base = child(0).evaluate(bindings);
      const double e = exponent();
      if (is_integer_exponent(e)) {
        if (base == 0.0 && e < 0.0) eval_fail(*this, "zero raised to a negative power");
        return int_pow(base, static_cast<long long>(std::llrint(e)));
      }
      if (base <= 0.0)
        eval_fail(*this, "non-integer power of a non-positive base");
      return std::pow(base, e);
    }
    case NodeKind::Ln: {
      const double x = child(0).evaluate(bindings);
      if (x <= 0.0) eval_fail(*this, "ln of a non-positive argument");
      return std::log(x);
    }
    case NodeKind::Exp:
      return std::exp(child(0).evaluate(bindings));
    case NodeKind::Sin:
      return std::sin(child(0).evaluate(bindings));
    case NodeKind::Cos:
      return std::cos(child(0).evaluate(bindings));
    case NodeKind::Sqrt: {
      const double x = child(0).evaluate(bindings);
      if (x < 0.0) eval_fail(*this, "sqrt of a negative argument");
      return std::sqrt(x);
    }
  }
  eval_fail(*this, "unknown node kind");
}

// ---------------------------------------------------------------------------
// Differentiation

Expression Expression::differentiate(std::string_view var) const {
  switch (kind()) {
    case NodeKind::Constant:
      return constant(0.0);
    case NodeKind::Variable:
      return constant(variable_name() == var ? 1.0 : 0.0);
    case NodeKind::Add:
      return add(child(0).differentiate(var), child(1).differentiate(var));
    case NodeKind::Sub:
      return sub(child(0).differentiate(var), child(1).differentiate(var));
    case NodeKind::Mul:
      return add(mul(child(0).differentiate(var), child(1)),
                 mul(child(0), child(1).differentiate(var)));
    case NodeKind::Div:
      return sub(div(child(0).differentiate(var), child(1)),
                 div(mul(child(0), child(1).differentiate(var)),
                     pow(child(1), 2.0)));
    case NodeKind::Neg:
      return neg(child(0).differentiate(var));
    case NodeKind::Pow: {
      const double e = exponent();
      return mul(mul(constant(e), pow(child(0), e - 1.0)),
                 child(0).differentiate(var));
    }
    case NodeKind::Ln:
      return div(child(0).differentiate(var), child(0));
    case NodeKind::Exp:
      return mul(child(0).differentiate(var), apply(NodeKind::Exp, child(0)));
    case NodeKind::Sin:
      return mul(child(0).differentiate(var), apply(NodeKind::Cos, child(0)));
    case NodeKind::Cos:
      return neg(mul(child(0).differentiate(var), apply(NodeKind::Sin, child(0))));
    case NodeKind::Sqrt:
      return div(child(0).differentiate(var),
                 mul(constant(2.0), apply(NodeKind::Sqrt, child(0))));
  }
  throw InputError("differentiate: unknown node kind");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Shortest representation that parses back to the same double.
std::string format_double_roundtrip(double v) {
  for (int prec = 1; prec <= 16; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return format_double(v);
}

constexpr int kPrecAddSub = 1;
constexpr int kPrecMulDiv = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPow = 4;
constexpr int kPrecAtom = 5;

int precedence_of(const Expression& e) {
  switch (e.kind()) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return kPrecAddSub;
    case NodeKind::Mul:
    case NodeKind::Div:
      return kPrecMulDiv;
    case NodeKind::Neg:
      return kPrecNeg;
    case NodeKind::Pow:
      return kPrecPow;
    case NodeKind::Constant:
      // A negative literal reads like a unary minus, so it parenthesizes
      // the same way.
      return std::signbit(e.constant_value()) ? kPrecNeg : kPrecAtom;
    default:
      return kPrecAtom;
  }
}

void render(const Expression& e, int min_prec, std::string& out) {
  const int prec = precedence_of(e);
  const bool parens = prec < min_prec;
  if (parens) out += '(';
  switch (e.kind()) {
    case NodeKind::Constant:
      out += format_double_roundtrip(e.constant_value());
      break;
    case NodeKind::Variable:
      out += e.variable_name();
      break;
    case NodeKind::Add:
      render(e.child(0), kPrecAddSub, out);
      out += " + ";
      render(e.child(1), kPrecAddSub + 1, out);
      break;
    case NodeKind::Sub:
      render(e.child(0), kPrecAddSub, out);
      out += " - ";
      render(e.child(1), kPrecAddSub + 1, out);
      break;
    case NodeKind::Mul:
      render(e.child(0), kPrecMulDiv, out);
      out += '*';
      render(e.child(1), kPrecMulDiv + 1, out);
      break;
    case NodeKind::Div:
      render(e.child(0), kPrecMulDiv, out);
      out += '/';
      render(e.child(1), kPrecMulDiv + 1, out);
      break;
    case NodeKind::Neg:
      out += '-';
      render(e.child(0), kPrecNeg, out);
      break;
    case NodeKind::Pow: {
      render(e.child(0), kPrecAtom, out);
      out += '^';
      const double ex = e.exponent();
      const std::string s = format_double_roundtrip(ex);
      if (std::signbit(ex)) {
        out += '(';
        out += s;
        out += ')';
      } else {
        out += s;
      }
      break;
    }
    case NodeKind::Ln:
      out += "ln(";
      render(e.child(0), 0, out);
      out += ')';
      break;
    case NodeKind::Exp:
      out += "exp(";
      render(e.child(0), 0, out);
      out += ')';
      break;
    case NodeKind::Sin:
      out += "sin(";
      render(e.child(0), 0, out);
      out += ')';
      break;
    case NodeKind::Cos:
      out += "cos(";
      render(e.child(0), 0, out);
      out += ')';
      break;
    case NodeKind::Sqrt:
      out += "sqrt(";
      render(e.child(0), 0, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string Expression::str() const {
  std::string out;
  render(*this, 0, out);
  return out;
}

namespace {

void collect_variables(const Expression& e, std::set<std::string>& names) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return;
    case NodeKind::Variable:
      names.insert(e.variable_name());
      return;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      collect_variables(e.child(0), names);
      collect_variables(e.child(1), names);
      return;
    default:
      collect_variables(e.child(0), names);
      return;
  }
}

}  // namespace

std::vector<std::string> Expression::free_variables() const {
  std::set<std::string> names;
  collect_variables(*this, names);
  return {names.begin(), names.end()};
}

bool Expression::depends_on(std::string_view var) const {
  auto vars = free_variables();
  return std::find(vars.begin(), vars.end(), var) != vars.end();
}

bool structurally_equal(const Expression& a, const Expression& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case NodeKind::Constant:
      return a.constant_value() == b.constant_value();
    case NodeKind::Variable:
      return a.variable_name() == b.variable_name();
    case NodeKind::Pow:
      return a.exponent() == b.exponent() &&
             structurally_equal(a.child(0), b.child(0));
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      return structurally_equal(a.child(0), b.child(0)) &&
             structurally_equal(a.child(1), b.child(1));
    default:
      return structurally_equal(a.child(0), b.child(0));
  }
}

// ---------------------------------------------------------------------------
// Alphabets

namespace {
const Alphabet kLagrangian = {"t", "qs", "qd"};
const Alphabet kGenerator = {"t", "q"};
const Alphabet kFamily = {"t", "alpha"};
const Alphabet kShift = {"t"};
const Alphabet kFull = {"t", "q", "qs", "qd", "qdd", "alpha"};
}  // namespace

const Alphabet& lagrangian_alphabet() { return kLagrangian; }
const Alphabet& acceleration_alphabet() { return kLagrangian; }
const Alphabet& generator_alphabet() { return kGenerator; }
const Alphabet& family_alphabet() { return kFamily; }
const Alphabet& shift_alphabet() { return kShift; }
const Alphabet& full_alphabet() { return kFull; }

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
  Kind kind;
  double number = 0.0;
  std::string ident;
  std::size_t pos = 0;
};

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return current_; }

  Token take() {
    Token t = current_;
    advance();
    return t;
  }

private:
  void advance() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    current_ = Token{Token::End, 0.0, {}, pos_};
    if (pos_ >= text_.size()) return;
    const char c = text_[pos_];
    switch (c) {
      case '+': current_.kind = Token::Plus; ++pos_; return;
      case '-': current_.kind = Token::Minus; ++pos_; return;
      case '*': current_.kind = Token::Star; ++pos_; return;
      case '/': current_.kind = Token::Slash; ++pos_; return;
      case '^': current_.kind = Token::Caret; ++pos_; return;
      case '(': current_.kind = Token::LParen; ++pos_; return;
      case ')': current_.kind = Token::RParen; ++pos_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      const char* end = text_.data() + text_.size();
      double value = 0.0;
      auto res = std::from_chars(begin, end, value);
      if (res.ec != std::errc()) {
        throw InputError("syntax error: bad number at position " + std::to_string(pos_));
      }
      current_.kind = Token::Number;
      current_.number = value;
      pos_ += static_cast<std::size_t>(res.ptr - begin);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      current_.kind = Token::Ident;
      current_.ident = std::string(text_.substr(start, pos_ - start));
      return;
    }
    throw InputError("syntax error: unexpected character '" + std::string(1, c) +
                     "' at position " + std::to_string(pos_));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Token current_;
};

bool known_function(const std::string& name, NodeKind* kind) {
  if (name == "ln") { *kind = NodeKind::Ln; return true; }
  if (name == "exp") { *kind = NodeKind::Exp; return true; }
  if (name == "sin") { *kind = NodeKind::Sin; return true; }
  if (name == "cos") { *kind = NodeKind::Cos; return true; }
  if (name == "sqrt") { *kind = NodeKind::Sqrt; return true; }
  return false;
}

}  // namespace

class Parser {
public:
  Parser(std::string_view text, const Alphabet& allowed)
      : lexer_(text), allowed_(allowed) {}

  Expression parse() {
    Expression e = parse_sum();
    const Token& t = lexer_.peek();
    if (t.kind != Token::End) {
      throw InputError("syntax error: unexpected token at position " +
                       std::to_string(t.pos));
    }
    return e;
  }

private:
  Expression parse_sum() {
    Expression e = parse_term();
    while (true) {
      const Token& t = lexer_.peek();
      if (t.kind == Token::Plus) {
        lexer_.take();
        e = Expression::raw(NodeKind::Add, std::move(e), parse_term());
      } else if (t.kind == Token::Minus) {
        lexer_.take();
        e = Expression::raw(NodeKind::Sub, std::move(e), parse_term());
      } else {
        return e;
      }
    }
  }

  Expression parse_term() {
    Expression e = parse_factor();
    while (true) {
      const Token& t = lexer_.peek();
      if (t.kind == Token::Star) {
        lexer_.take();
        e = Expression::raw(NodeKind::Mul, std::move(e), parse_factor());
      } else if (t.kind == Token::Slash) {
        lexer_.take();
        e = Expression::raw(NodeKind::Div, std::move(e), parse_factor());
      } else {
        return e;
      }
    }
  }

  // factor := unary [ '^' factor ]   (power binds right, below unary minus)
  Expression parse_factor() {
    Expression base = parse_unary();
    if (lexer_.peek().kind == Token::Caret) {
      const std::size_t pos = lexer_.peek().pos;
      lexer_.take();
      Expression exp_tree = parse_factor();
      double exponent = 0.0;
      if (!fold_constant(exp_tree, &exponent)) {
        throw InputError("syntax error: power exponent must be a constant at position " +
                         std::to_string(pos));
      }
      return Expression::raw_pow(std::move(base), exponent);
    }
    return base;
  }

  Expression parse_unary() {
    if (lexer_.peek().kind == Token::Minus) {
      lexer_.take();
      Expression inner = parse_unary();
      // Fold the sign into numeric literals so "-3" is the literal -3.
      if (inner.kind() == NodeKind::Constant)
        return Expression::constant(-inner.constant_value());
      return Expression::raw(NodeKind::Neg, std::move(inner), Expression(nullptr));
    }
    return parse_primary();
  }

  Expression parse_primary() {
    Token t = lexer_.take();
    switch (t.kind) {
      case Token::Number:
        return Expression::constant(t.number);
      case Token::LParen: {
        Expression e = parse_sum();
        expect(Token::RParen, ")");
        return e;
      }
      case Token::Ident: {
        NodeKind fn;
        if (lexer_.peek().kind == Token::LParen && known_function(t.ident, &fn)) {
          lexer_.take();
          Expression arg = parse_sum();
          expect(Token::RParen, ")");
          return Expression::raw(fn, std::move(arg), Expression(nullptr));
        }
        if (std::find(allowed_.begin(), allowed_.end(), t.ident) == allowed_.end()) {
          throw InputError("unknown identifier '" + t.ident +
                           "' at position " + std::to_string(t.pos) +
                           " (allowed: " + alphabet_text() + ")");
        }
        return Expression::variable(t.ident);
      }
      default:
        throw InputError("syntax error: unexpected token at position " +
                         std::to_string(t.pos));
    }
  }

  void expect(Token::Kind kind, const char* what) {
    const Token& t = lexer_.peek();
    if (t.kind != kind) {
      throw InputError("syntax error: expected '" + std::string(what) +
                       "' at position " + std::to_string(t.pos));
    }
    lexer_.take();
  }

  bool fold_constant(const Expression& e, double* out) {
    if (!e.free_variables().empty()) return false;
    *out = e.evaluate(Bindings{});
    return true;
  }

  std::string alphabet_text() const {
    std::string s;
    for (const auto& name : allowed_) {
      if (!s.empty()) s += ", ";
      s += name;
    }
    return s;
  }

  Lexer lexer_;
  const Alphabet& allowed_;
};

Expression parse_expression(std::string_view text, const Alphabet& allowed) {
  Parser parser(text, allowed);
  return parser.parse();
}

}  // namespace tsvar
