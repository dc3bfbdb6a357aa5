#pragma once

// Shared helpers for the test suites: deterministic RNG, random problem
// generators, and the finite-difference oracle used to check symbolic
// derivatives. Everything here is test-side and independent of the
// implementation paths it exercises.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "tsvar/dynamics.hpp"
#include "tsvar/expr.hpp"
#include "tsvar/symmetry.hpp"
#include "tsvar/timescale.hpp"

namespace testsupport {

using tsvar::Bindings;
using tsvar::Expression;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(gen);
}

// Central finite difference with the step scaled as the cube root of
// machine epsilon; the standard independent oracle for symbolic partials.
inline double finite_difference(const Expression& e, const Bindings& at,
                                const std::string& var) {
  const double x = *at.get(var);
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                   std::max(1.0, std::abs(x));
  Bindings up = at, dn = at;
  up.set(var, x + h);
  dn.set(var, x - h);
  return (e.evaluate(up) - e.evaluate(dn)) / (2.0 * h);
}

// Random scattered scale: positive random graininess steps.
inline tsvar::TimeScale random_scale(std::mt19937_64& gen, std::size_t min_points,
                                     std::size_t max_points, double mu_lo = 0.05,
                                     double mu_hi = 0.3) {
  const std::size_t n = min_points + static_cast<std::size_t>(gen() % (max_points - min_points + 1));
  std::vector<double> points(n);
  double t = uniform(gen, 0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    points[i] = t;
    t += uniform(gen, mu_lo, mu_hi);
  }
  return tsvar::TimeScale::from_points(std::move(points));
}

// Random polynomial Lagrangian a*qd^2 + b*qs*qd + c*qs^2 + d*qs + e*qd + f*t,
// with the qd^2 coefficient bounded away from zero so the Euler-Lagrange
// step is nonsingular on moderate graininess.
inline tsvar::Lagrangian random_lagrangian(std::mt19937_64& gen) {
  using E = Expression;
  const double a = uniform(gen, 0.6, 1.4);
  const double b = uniform(gen, -0.3, 0.3);
  const double c = uniform(gen, -0.5, 0.5);
  const double d = uniform(gen, -1.0, 1.0);
  const double e = uniform(gen, -1.0, 1.0);
  const double f = uniform(gen, -1.0, 1.0);
  const E t = E::variable("t"), qs = E::variable("qs"), qd = E::variable("qd");
  E sum = E::mul(E::constant(a), E::pow(qd, 2.0));
  sum = E::add(sum, E::mul(E::constant(b), E::mul(qs, qd)));
  sum = E::add(sum, E::mul(E::constant(c), E::pow(qs, 2.0)));
  sum = E::add(sum, E::mul(E::constant(d), qs));
  sum = E::add(sum, E::mul(E::constant(e), qd));
  sum = E::add(sum, E::mul(E::constant(f), t));
  return tsvar::Lagrangian(sum);
}

// Random expression covering every node kind. Arguments of ln, sqrt and
// real powers are forced positive via x^2 + c; denominators likewise.
inline Expression random_expression(std::mt19937_64& gen,
                                    const std::vector<std::string>& vars,
                                    int depth) {
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
    case 3: return Expression::div(a, positive_of(b));
    case 4: return Expression::neg(a);
    case 5: return Expression::pow(a, static_cast<double>(1 + gen() % 3));
    case 6: return Expression::pow(positive_of(a), uniform(gen, 0.5, 2.5));
    case 7: return Expression::apply(tsvar::NodeKind::Ln, positive_of(a));
    case 8:
      return gen() % 2 == 0 ? Expression::apply(tsvar::NodeKind::Sin, a)
                            : Expression::apply(tsvar::NodeKind::Cos, a);
    default: return Expression::apply(tsvar::NodeKind::Sqrt, positive_of(a));
  }
}

inline Expression random_full_expression(std::mt19937_64& gen, int depth) {
  static const std::vector<std::string> vars = {"t", "q", "qs", "qd"};
  Expression e = random_expression(gen, vars, depth);
  if (gen() % 7 == 0) {
    e = Expression::apply(tsvar::NodeKind::Exp,
                          Expression::mul(Expression::constant(0.1), e));
  }
  return e;
}

inline Bindings random_bindings(std::mt19937_64& gen) {
  Bindings b;
  b.set("t", uniform(gen, 0.4, 2.0));
  b.set("q", uniform(gen, 0.4, 2.0));
  b.set("qs", uniform(gen, 0.4, 2.0));
  b.set("qd", uniform(gen, 0.4, 2.0));
  return b;
}

// Random polynomial generator component of degree <= 2 in (t, q).
inline Expression random_generator_poly(std::mt19937_64& gen) {
  using E = Expression;
  const E t = E::variable("t"), q = E::variable("q");
  E sum = E::constant(uniform(gen, -1.0, 1.0));
  sum = E::add(sum, E::mul(E::constant(uniform(gen, -1.0, 1.0)), t));
  sum = E::add(sum, E::mul(E::constant(uniform(gen, -1.0, 1.0)), q));
  sum = E::add(sum, E::mul(E::constant(uniform(gen, -0.5, 0.5)), E::pow(t, 2.0)));
  sum = E::add(sum, E::mul(E::constant(uniform(gen, -0.5, 0.5)), E::mul(t, q)));
  sum = E::add(sum, E::mul(E::constant(uniform(gen, -0.5, 0.5)), E::pow(q, 2.0)));
  return sum;
}

}  // namespace testsupport
