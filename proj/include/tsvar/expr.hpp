#pragma once

#include <initializer_list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tsvar {

enum class NodeKind {
  Constant,
  Variable,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,  // base expression, numeric exponent
  Ln,
  Exp,
  Sin,
  Cos,
  Sqrt,
};

/// Partial map from variable names to values. Evaluation requires every
/// free variable of the expression to be bound.
class Bindings {
public:
  Bindings() = default;
  Bindings(std::initializer_list<std::pair<std::string, double>> init);

  void set(std::string name, double value);
  std::optional<double> get(std::string_view name) const;

private:
  std::vector<std::pair<std::string, double>> slots_;
};

/// Immutable arithmetic expression tree over a fixed variable alphabet.
/// Shared subtrees are fine; nodes are never mutated after construction.
class Expression {
public:
  Expression();  // constant 0

  static Expression constant(double value);
  static Expression variable(std::string name);

  // Combinators with light constant folding (0 + x -> x, 1 * x -> x,
  // constant arithmetic folds when finite). Used by differentiate(); the
  // parser keeps literal trees instead.
  static Expression add(Expression a, Expression b);
  static Expression sub(Expression a, Expression b);
  static Expression mul(Expression a, Expression b);
  static Expression div(Expression a, Expression b);
  static Expression neg(Expression a);
  static Expression pow(Expression base, double exponent);
  static Expression apply(NodeKind fn, Expression arg);

  NodeKind kind() const;
  double constant_value() const;       // Constant nodes
  const std::string& variable_name() const;  // Variable nodes
  double exponent() const;             // Pow nodes
  Expression child(int index) const;   // 0 = first operand, 1 = second

  double evaluate(const Bindings& bindings) const;
  Expression differentiate(std::string_view var) const;

  std::string str() const;
  std::vector<std::string> free_variables() const;
  bool depends_on(std::string_view var) const;

  bool is_constant(double value) const;

private:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  explicit Expression(NodePtr node);
  static Expression raw(NodeKind kind, Expression a, Expression b);
  static Expression raw_pow(Expression base, double exponent);

  NodePtr node_;
  friend bool structurally_equal(const Expression& a, const Expression& b);
  friend class Parser;
};

bool structurally_equal(const Expression& a, const Expression& b);

/// Role alphabets. The paper's objects have fixed signatures, enforced at
/// parse time: a Lagrangian sees (t, q^sigma, q^delta), a generator (t, q),
/// a variation family (t, alpha).
using Alphabet = std::vector<std::string>;
const Alphabet& lagrangian_alphabet();    // {t, qs, qd}
const Alphabet& acceleration_alphabet();  // {t, qs, qd}
const Alphabet& generator_alphabet();     // {t, q}
const Alphabet& family_alphabet();        // {t, alpha}
const Alphabet& shift_alphabet();         // {t}
const Alphabet& full_alphabet();          // {t, q, qs, qd, qdd, alpha}

/// Recursive-descent parser. Precedence: unary minus > power > mul/div >
/// add/sub; everything left-associative except power (right). Power
/// exponents must fold to a constant at parse time. Unknown identifiers
/// outside `allowed` are rejected with their position.
Expression parse_expression(std::string_view text, const Alphabet& allowed);

}  // namespace tsvar
