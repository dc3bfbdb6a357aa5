#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tsvar/expr.hpp"
#include "tsvar/report.hpp"
#include "tsvar/timescale.hpp"

namespace tsvar {

/// A Lagrangian L(t, q^sigma, q^delta) with its symbolic partials cached:
/// d1 = dL/dt, d2 = dL/dqs, d3 = dL/dqd, plus the second partials d33 and
/// d32 that drive the pointwise acceleration solve.
class Lagrangian {
public:
  explicit Lagrangian(Expression L);
  static Lagrangian parse(std::string_view text);

  const Expression& expr() const { return L_; }
  const Expression& d1_expr() const { return d1_; }
  const Expression& d2_expr() const { return d2_; }
  const Expression& d3_expr() const { return d3_; }
  const Expression& d33_expr() const { return d33_; }
  const Expression& d32_expr() const { return d32_; }

  double L(double t, double qs, double qd) const;
  double d1(double t, double qs, double qd) const;
  double d2(double t, double qs, double qd) const;
  double d3(double t, double qs, double qd) const;
  double d33(double t, double qs, double qd) const;
  double d32(double t, double qs, double qd) const;

private:
  Expression L_, d1_, d2_, d3_, d33_, d32_;
};

/// q sampled on a scale with its delta-derivative ladders. qd lives on the
/// kappa-domain, qdd on kappa^2, qddd on kappa^3; the shift identity
/// f^sigma = f + mu f^delta holds on every ladder by construction.
class Trajectory {
public:
  Trajectory(TimeScale ts, std::vector<double> q);

  const TimeScale& scale() const { return ts_; }
  std::size_t size() const { return q_.size(); }

  double t(std::size_t i) const { return ts_.point(i); }
  double mu(std::size_t i) const { return ts_.mu(i); }
  double q(std::size_t i) const { return q_.at(i); }
  double qs(std::size_t i) const { return q_.at(i + 1); }       // q^sigma
  double qss(std::size_t i) const { return q_.at(i + 2); }      // q^sigma*sigma
  double qd(std::size_t i) const { return qd_.at(i); }          // q^delta
  double qds(std::size_t i) const { return qd_.at(i + 1); }     // q^delta*sigma
  double qdd(std::size_t i) const { return qdd_.at(i); }
  double qddd(std::size_t i) const { return qddd_.at(i); }

  const std::vector<double>& q_values() const { return q_; }
  const std::vector<double>& qd_values() const { return qd_; }
  const std::vector<double>& qdd_values() const { return qdd_; }
  const std::vector<double>& qddd_values() const { return qddd_; }

private:
  TimeScale ts_;
  std::vector<double> q_, qd_, qdd_, qddd_;
};

/// Scalar state handed to the acceleration field: the point, its graininess,
/// the next graininess, and (q^sigma, q^delta) there.
struct AccelState {
  double t = 0.0;
  double mu = 0.0;
  double mu_next = 0.0;
  double qs = 0.0;
  double qd = 0.0;
};

struct RootSettings {
  double tolerance = 1e-12;
  int max_iterations = 50;
  double bracket_factor = 1e3;       // bracket half-width = max(1,|qd|)*factor
  double singular_threshold = 1e-10;
};

/// The generalized acceleration q^dd = h(t, q^sigma, q^delta), either as an
/// explicit expression or solved pointwise from the Euler-Lagrange step.
/// The implicit solve uses Newton with the exact symbolic derivative
/// d33 + mu_next*d32 (the nonsingularity quantity at the shifted point) and
/// falls back to bisection.
class AccelerationField {
public:
  static AccelerationField from_expression(Expression h);
  static AccelerationField from_lagrangian(Lagrangian L, RootSettings settings = {});

  bool is_explicit() const { return h_.has_value(); }
  const std::optional<Expression>& expression() const { return h_; }
  const std::optional<Lagrangian>& lagrangian() const { return lag_; }

  double eval(const AccelState& s) const;

  /// Partials of h wrt t, qs, qd at the state: symbolic in explicit mode,
  /// central finite differences on the root solve in implicit mode.
  double d_t(const AccelState& s) const;
  double d_qs(const AccelState& s) const;
  double d_qd(const AccelState& s) const;

private:
  AccelerationField() = default;
  double solve_implicit(const AccelState& s) const;

  std::optional<Expression> h_, h_t_, h_qs_, h_qd_;
  std::optional<Lagrangian> lag_;
  RootSettings settings_;
};

/// Euler-Lagrange residual D/Dt d3L - d2L along the trajectory (kappa^2).
ResidualReport el_residual(const Lagrangian& L, const Trajectory& tr);

enum class DuboisVariant { Printed, SigmaForm };

/// DuBois-Reymond residual. `Printed` evaluates the equation exactly as
/// stated: D/Dt[-L + d3L qd + d1L mu] + d1L. `SigmaForm` is the diagnostic
/// alternative D/Dt[L - d3L qd] - d1L^sigma; the two disagree on scattered
/// scales and both are reported rather than adjudicated.
ResidualReport dubois_residual(const Lagrangian& L, const Trajectory& tr,
                               DuboisVariant variant);

/// Pointwise values of d33 + mu(1 + mu^delta) d32 with the indices whose
/// magnitude falls below the threshold flagged as singular.
struct NonsingularityReport {
  ResidualReport values;
  double threshold = 1e-10;
  std::vector<std::size_t> singular_indices;
  bool nonsingular() const { return singular_indices.empty(); }
};
NonsingularityReport nonsingularity(const Lagrangian& L, const Trajectory& tr,
                                    double threshold = 1e-10);

double acceleration(const AccelerationField& acc, const AccelState& state);

/// Steps q_{i+1} = q_i + mu_i qd_i, qd_{i+1} = qd_i + mu_i h_i from
/// (q0, v0); ladders are rebuilt from the stepped q.
Trajectory solve_ivp(const AccelerationField& acc, const TimeScale& ts,
                     double q0, double v0);

/// Secant shooting on v0 until |q(t_end) - B| <= tolerance.
Trajectory solve_bvp(const AccelerationField& acc, const TimeScale& ts,
                     double A, double B, double tolerance = 1e-10,
                     int max_iterations = 100);

}  // namespace tsvar
