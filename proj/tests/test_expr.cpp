#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "tsvar/errors.hpp"
#include "tsvar/expr.hpp"

using namespace tsvar;
using testsupport::finite_difference;

TEST_CASE("parser builds the expected shapes") {
  const Expression e = parse_expression("t + qs*qd", lagrangian_alphabet());
  REQUIRE(e.kind() == NodeKind::Add);
  CHECK(e.child(0).kind() == NodeKind::Variable);
  CHECK(e.child(0).variable_name() == "t");
  REQUIRE(e.child(1).kind() == NodeKind::Mul);
  CHECK(e.child(1).child(0).variable_name() == "qs");
  CHECK(e.child(1).child(1).variable_name() == "qd");

  const Expression h = parse_expression("-qd/(2*t)", acceleration_alphabet());
  REQUIRE(h.kind() == NodeKind::Div);
  CHECK(h.child(0).kind() == NodeKind::Neg);
  CHECK(h.child(1).kind() == NodeKind::Mul);
}

TEST_CASE("parser precedence and associativity") {
  // Left associativity.
  const Expression e = parse_expression("t - qs - qd", lagrangian_alphabet());
  REQUIRE(e.kind() == NodeKind::Sub);
  CHECK(e.child(0).kind() == NodeKind::Sub);

  // Power binds right and the exponent folds to a constant.
  const Expression p = parse_expression("t^2^3", lagrangian_alphabet());
  REQUIRE(p.kind() == NodeKind::Pow);
  CHECK(p.exponent() == 8.0);

  // Unary minus binds tighter than power.
  const Expression m = parse_expression("-t^2", lagrangian_alphabet());
  REQUIRE(m.kind() == NodeKind::Pow);
  CHECK(m.child(0).kind() == NodeKind::Neg);

  Bindings b{{"t", 3.0}};
  CHECK(parse_expression("-t^2", shift_alphabet()).evaluate(b) == 9.0);
  CHECK(parse_expression("2*t^2", shift_alphabet()).evaluate(b) == 18.0);
  CHECK(parse_expression("t^-1", shift_alphabet()).evaluate(b) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("parser rejects malformed input with positions") {
  CHECK_THROWS_AS(parse_expression("2*+", full_alphabet()), InputError);
  CHECK_THROWS_AS(parse_expression("(t", full_alphabet()), InputError);
  CHECK_THROWS_AS(parse_expression("t^qs", full_alphabet()), InputError);
  CHECK_THROWS_AS(parse_expression("foo(t)", full_alphabet()), InputError);

  // Alphabet enforcement names the offender.
  try {
    parse_expression("t + qd", generator_alphabet());
    FAIL("expected InputError");
  } catch (const InputError& err) {
    CHECK(std::string(err.what()).find("qd") != std::string::npos);
  }
}

TEST_CASE("evaluation oracles") {
  Bindings b{{"t", 8.0}};
  CHECK(parse_expression("ln(t)/ln(2)", shift_alphabet()).evaluate(b) ==
        doctest::Approx(3.0).epsilon(1e-15));

  Bindings state{{"t", 1.0}, {"qs", 1.0}, {"qd", 1.0}};
  CHECK(parse_expression("t + qs*qd", lagrangian_alphabet()).evaluate(state) == 2.0);

  Bindings zero{{"t", 0.0}};
  CHECK_THROWS_AS(parse_expression("1/t", shift_alphabet()).evaluate(zero), EvalError);
  CHECK_THROWS_AS(parse_expression("ln(t)", shift_alphabet()).evaluate(zero), EvalError);
  CHECK_THROWS_AS(parse_expression("sqrt(t - 1)", shift_alphabet()).evaluate(zero),
                  EvalError);
  CHECK_THROWS_AS(parse_expression("t", shift_alphabet()).evaluate(Bindings{}),
                  EvalError);
}

TEST_CASE("differentiation of the worked Lagrangian") {
  const Expression L = parse_expression("t + qs*qd", lagrangian_alphabet());
  CHECK(L.differentiate("qd").str() == "qs");
  CHECK(L.differentiate("qs").str() == "qd");
  CHECK(L.differentiate("t").str() == "1");
}

TEST_CASE("differentiate basics") {
  const Expression c = Expression::constant(4.2);
  CHECK(c.differentiate("t").is_constant(0.0));
  const Expression t = Expression::variable("t");
  CHECK(t.differentiate("t").is_constant(1.0));
  CHECK(t.differentiate("q").is_constant(0.0));
}

namespace {

// Random expression generator covering every node kind. Arguments of ln,
// sqrt and real powers are forced positive via x^2 + c.
Expression random_expression(std::mt19937_64& gen, const std::vector<std::string>& vars,
                             int depth) {
  using testsupport::uniform;
  auto positive_of = [&](Expression inner) {
    return Expression::add(Expression::pow(inner, 2.0),
                           Expression::constant(uniform(gen, 0.25, 1.5)));
  };
  if (depth <= 0 || gen() % 5 == 0) {
    if (gen() % 2 == 0) return Expression::constant(uniform(gen, -2.0, 2.0));
    return Expression::variable(vars[gen() % vars.size()]);
  }
  const int pick = static_cast<int>(gen() % 10);
  Expression a = random_expression(gen, vars, depth - 1);
  Expression b = random_expression(gen, vars, depth - 1);
  switch (pick) {
    case 0: return Expression::add(a, b);
    case 1: return Expression::sub(a, b);
    case 2: return Expression::mul(a, b);
    case 3:
      // Keep denominators away from zero.
      return Expression::div(a, positive_of(b));
    case 4: return Expression::neg(a);
    case 5: return Expression::pow(a, static_cast<double>(1 + gen() % 3));
    case 6: return Expression::pow(positive_of(a), uniform(gen, 0.5, 2.5));
    case 7: return Expression::apply(NodeKind::Ln, positive_of(a));
    case 8: return gen() % 2 == 0 ? Expression::apply(NodeKind::Sin, a)
                                  : Expression::apply(NodeKind::Cos, a);
    default: return Expression::apply(NodeKind::Sqrt, positive_of(a));
  }
}

Expression random_full(std::mt19937_64& gen, int depth) {
  static const std::vector<std::string> vars = {"t", "q", "qs", "qd"};
  Expression e = random_expression(gen, vars, depth);
  // exp applied on top now and then, scaled down to avoid overflow.
  if (gen() % 7 == 0) {
    e = Expression::apply(NodeKind::Exp,
                          Expression::mul(Expression::constant(0.1), e));
  }
  return e;
}

Bindings random_bindings(std::mt19937_64& gen) {
  using testsupport::uniform;
  Bindings b;
  b.set("t", uniform(gen, 0.4, 2.0));
  b.set("q", uniform(gen, 0.4, 2.0));
  b.set("qs", uniform(gen, 0.4, 2.0));
  b.set("qd", uniform(gen, 0.4, 2.0));
  return b;
}

}  // namespace

TEST_CASE("round trip: parse(str(e)) is structurally identical and evaluates alike") {
  auto gen = testsupport::rng(20240811);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const Expression e = random_full(gen, 4);
    const std::string text = e.str();
    CAPTURE(text);
    const Expression back = parse_expression(text, full_alphabet());
    CHECK(structurally_equal(e, back));
    for (int trial = 0; trial < 5; ++trial) {
      Bindings b = random_bindings(gen);
      double v0;
      try {
        v0 = e.evaluate(b);
      } catch (const EvalError&) {
        continue;  // domain excursion in a random tree; skip the binding
      }
      const double v1 = back.evaluate(b);
      CHECK(std::abs(v1 - v0) <= 1e-15 * std::max(1.0, std::abs(v0)));
      ++checked;
    }
  }
  CHECK(checked > 200);
}

TEST_CASE("symbolic derivative agrees with the central-difference oracle") {
  auto gen = testsupport::rng(777001);
  static const std::vector<std::string> vars = {"t", "q", "qs", "qd"};
  int checked = 0;
  for (int k = 0; k < 50; ++k) {
    const Expression e = random_full(gen, 3);
    for (const auto& var : vars) {
      const Expression de = e.differentiate(var);
      for (int trial = 0; trial < 20; ++trial) {
        Bindings b = random_bindings(gen);
        double sym, fd;
        try {
          sym = de.evaluate(b);
          fd = finite_difference(e, b, var);
        } catch (const EvalError&) {
          continue;
        }
        if (!std::isfinite(fd) || std::abs(fd) > 1e6) continue;
        CAPTURE(e.str());
        CAPTURE(var);
        CHECK(std::abs(sym - fd) <= 1e-6 * std::max(1.0, std::abs(sym)));
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("differentiation is linear") {
  auto gen = testsupport::rng(5150);
  for (int k = 0; k < 20; ++k) {
    const Expression f = random_full(gen, 3);
    const Expression g = random_full(gen, 3);
    const double a = testsupport::uniform(gen, -2.0, 2.0);
    const double b = testsupport::uniform(gen, -2.0, 2.0);
    const Expression combo = Expression::add(
        Expression::mul(Expression::constant(a), f),
        Expression::mul(Expression::constant(b), g));
    const Expression d_combo = combo.differentiate("t");
    const Expression d_parts = Expression::add(
        Expression::mul(Expression::constant(a), f.differentiate("t")),
        Expression::mul(Expression::constant(b), g.differentiate("t")));
    for (int trial = 0; trial < 5; ++trial) {
      Bindings bind = random_bindings(gen);
      double lhs, rhs;
      try {
        lhs = d_combo.evaluate(bind);
        rhs = d_parts.evaluate(bind);
      } catch (const EvalError&) {
        continue;
      }
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("integer powers accept negative bases, real powers do not") {
  Bindings b{{"t", -2.0}};
  CHECK(parse_expression("t^3", shift_alphabet()).evaluate(b) == -8.0);
  CHECK(parse_expression("t^2", shift_alphabet()).evaluate(b) == 4.0);
  CHECK_THROWS_AS(parse_expression("t^0.5", shift_alphabet()).evaluate(b), EvalError);
}
