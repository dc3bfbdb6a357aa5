#include "tsvar/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tsvar/errors.hpp"

namespace tsvar {

namespace {

void check_alphabet(const Expression& e, const Alphabet& allowed,
                    const char* role) {
  for (const auto& name : e.free_variables()) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw InputError(std::string(role) + " may not reference '" + name + "'");
    }
  }
}

Bindings state_bindings(double t, double qs, double qd) {
  Bindings b;
  b.set("t", t);
  b.set("qs", qs);
  b.set("qd", qd);
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lagrangian

Lagrangian::Lagrangian(Expression L) : L_(std::move(L)) {
  check_alphabet(L_, lagrangian_alphabet(), "a Lagrangian");
  d1_ = L_.differentiate("t");
  d2_ = L_.differentiate("qs");
  d3_ = L_.differentiate("qd");
  d33_ = d3_.differentiate("qd");
  d32_ = d3_.differentiate("qs");
}

Lagrangian Lagrangian::parse(std::string_view text) {
  return Lagrangian(parse_expression(text, lagrangian_alphabet()));
}

double Lagrangian::L(double t, double qs, double qd) const {
  return L_.evaluate(state_bindings(t, qs, qd));
}
double Lagrangian::d1(double t, double qs, double qd) const {
  return d1_.evaluate(state_bindings(t, qs, qd));
}
double Lagrangian::d2(double t, double qs, double qd) const {
  return d2_.evaluate(state_bindings(t, qs, qd));
}
double Lagrangian::d3(double t, double qs, double qd) const {
  return d3_.evaluate(state_bindings(t, qs, qd));
}
double Lagrangian::d33(double t, double qs, double qd) const {
  return d33_.evaluate(state_bindings(t, qs, qd));
}
double Lagrangian::d32(double t, double qs, double qd) const {
  return d32_.evaluate(state_bindings(t, qs, qd));
}

// ---------------------------------------------------------------------------
// Trajectory

namespace {

std::vector<double> forward_ladder(const TimeScale& ts,
                                   const std::vector<double>& v) {
  if (v.size() < 2) return {};
  std::vector<double> out(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    out[i] = (v[i + 1] - v[i]) / ts.mu(i);
  return out;
}

}  // namespace

Trajectory::Trajectory(TimeScale ts, std::vector<double> q)
    : ts_(std::move(ts)), q_(std::move(q)) {
  if (q_.size() != ts_.size()) {
    throw InputError("trajectory: q must be sampled on every scale point");
  }
  qd_ = forward_ladder(ts_, q_);
  qdd_ = forward_ladder(ts_, qd_);
  qddd_ = forward_ladder(ts_, qdd_);
}

// ---------------------------------------------------------------------------
// AccelerationField

AccelerationField AccelerationField::from_expression(Expression h) {
  check_alphabet(h, acceleration_alphabet(), "an acceleration");
  AccelerationField field;
  field.h_t_ = h.differentiate("t");
  field.h_qs_ = h.differentiate("qs");
  field.h_qd_ = h.differentiate("qd");
  field.h_ = std::move(h);
  return field;
}

AccelerationField AccelerationField::from_lagrangian(Lagrangian L,
                                                     RootSettings settings) {
  AccelerationField field;
  field.lag_ = std::move(L);
  field.settings_ = settings;
  return field;
}

double AccelerationField::eval(const AccelState& s) const {
  if (h_) return h_->evaluate(state_bindings(s.t, s.qs, s.qd));
  return solve_implicit(s);
}

double AccelerationField::solve_implicit(const AccelState& s) const {
  const Lagrangian& lag = *lag_;
  if (!(s.mu > 0.0)) {
    throw InputError("implicit acceleration needs mu > 0");
  }
  const double sigma_t = s.t + s.mu;
  const double d3_here = lag.d3(s.t, s.qs, s.qd);
  const double d2_here = lag.d2(s.t, s.qs, s.qd);

  // Euler-Lagrange step residual in the unknown x = q^dd. The q^delta*sigma
  // and q^sigma*sigma substitutions come from the shift rule applied twice.
  auto residual = [&](double x) {
    const double qd_next = s.qd + s.mu * x;
    const double qs_next = s.qs + s.mu_next * qd_next;
    return (lag.d3(sigma_t, qs_next, qd_next) - d3_here) / s.mu - d2_here;
  };
  auto derivative = [&](double x) {
    const double qd_next = s.qd + s.mu * x;
    const double qs_next = s.qs + s.mu_next * qd_next;
    return lag.d33(sigma_t, qs_next, qd_next) +
           s.mu_next * lag.d32(sigma_t, qs_next, qd_next);
  };

  const double res_scale =
      std::max({1.0, std::abs(d3_here) / s.mu, std::abs(d2_here)});
  const double tol = settings_.tolerance * res_scale;

  // The Newton derivative is the Eq.-style nonsingularity quantity at the
  // shifted point; a vanishing value means the step cannot determine q^dd.
  if (std::abs(derivative(0.0)) < settings_.singular_threshold) {
    throw NumericError("singular state at t = " + std::to_string(s.t) +
                       ": d33 + mu_next*d32 vanishes, q^dd is undetermined");
  }

  double x = 0.0;
  double fx = residual(x);
  for (int iter = 0; iter < settings_.max_iterations; ++iter) {
    if (std::abs(fx) <= tol) return x;
    const double dfx = derivative(x);
    if (dfx == 0.0 || !std::isfinite(dfx)) break;
    const double step = fx / dfx;
    const double next = x - step;
    if (!std::isfinite(next)) break;
    x = next;
    fx = residual(x);
  }
  if (std::abs(fx) <= tol) return x;

  // Bisection fallback.
  const double width = std::max(1.0, std::abs(s.qd)) * settings_.bracket_factor;
  double lo = -width, hi = width;
  double flo = residual(lo), fhi = residual(hi);
  if (!(flo < 0.0) == !(fhi < 0.0)) {
    throw NumericError(
        "acceleration root solve failed at t = " + std::to_string(s.t) +
        ": no sign change on bracket [" + std::to_string(lo) + ", " +
        std::to_string(hi) + "], residual " + std::to_string(fx));
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = residual(mid);
    if (std::abs(fmid) <= tol || hi - lo <= 1e-15 * std::max(1.0, std::abs(mid)))
      return mid;
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  throw NumericError("acceleration bisection did not converge at t = " +
                     std::to_string(s.t));
}

namespace {
// Central-difference step for implicit-mode partials.
double fd_step(double x) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) *
         std::max(1.0, std::abs(x));
}
}  // namespace

double AccelerationField::d_t(const AccelState& s) const {
  if (h_) return h_t_->evaluate(state_bindings(s.t, s.qs, s.qd));
  const double h = fd_step(s.t);
  AccelState up = s, dn = s;
  up.t += h;
  dn.t -= h;
  return (eval(up) - eval(dn)) / (2.0 * h);
}

double AccelerationField::d_qs(const AccelState& s) const {
  if (h_) return h_qs_->evaluate(state_bindings(s.t, s.qs, s.qd));
  const double h = fd_step(s.qs);
  AccelState up = s, dn = s;
  up.qs += h;
  dn.qs -= h;
  return (eval(up) - eval(dn)) / (2.0 * h);
}

double AccelerationField::d_qd(const AccelState& s) const {
  if (h_) return h_qd_->evaluate(state_bindings(s.t, s.qs, s.qd));
  const double h = fd_step(s.qd);
  AccelState up = s, dn = s;
  up.qd += h;
  dn.qd -= h;
  return (eval(up) - eval(dn)) / (2.0 * h);
}

double acceleration(const AccelerationField& acc, const AccelState& state) {
  return acc.eval(state);
}

// ---------------------------------------------------------------------------
// Residual reports

ResidualReport el_residual(const Lagrangian& L, const Trajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 3) throw InputError("el_residual needs at least 3 points");
  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double d3_next = L.d3(tr.t(i + 1), tr.qs(i + 1), tr.qd(i + 1));
    const double d3_here = L.d3(tr.t(i), tr.qs(i), tr.qd(i));
    const double d2_here = L.d2(tr.t(i), tr.qs(i), tr.qd(i));
    const double d3_rate = (d3_next - d3_here) / tr.mu(i);
    scale.note(d3_rate);
    scale.note(d2_here);
    series[i] = d3_rate - d2_here;
  }
  return make_report(0, std::move(series), scale.value());
}

ResidualReport dubois_residual(const Lagrangian& L, const Trajectory& tr,
                               DuboisVariant variant) {
  const std::size_t n = tr.size();
  if (n < 3) throw InputError("dubois_residual needs at least 3 points");

  auto energy_printed = [&](std::size_t i) {
    return -L.L(tr.t(i), tr.qs(i), tr.qd(i)) +
           L.d3(tr.t(i), tr.qs(i), tr.qd(i)) * tr.qd(i) +
           L.d1(tr.t(i), tr.qs(i), tr.qd(i)) * tr.mu(i);
  };
  auto energy_sigma = [&](std::size_t i) {
    return L.L(tr.t(i), tr.qs(i), tr.qd(i)) -
           L.d3(tr.t(i), tr.qs(i), tr.qd(i)) * tr.qd(i);
  };

  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    if (variant == DuboisVariant::Printed) {
      const double rate = (energy_printed(i + 1) - energy_printed(i)) / tr.mu(i);
      const double d1_here = L.d1(tr.t(i), tr.qs(i), tr.qd(i));
      scale.note(rate);
      scale.note(d1_here);
      series[i] = rate + d1_here;
    } else {
      const double rate = (energy_sigma(i + 1) - energy_sigma(i)) / tr.mu(i);
      const double d1_next = L.d1(tr.t(i + 1), tr.qs(i + 1), tr.qd(i + 1));
      scale.note(rate);
      scale.note(d1_next);
      series[i] = rate - d1_next;
    }
  }
  return make_report(0, std::move(series), scale.value());
}

NonsingularityReport nonsingularity(const Lagrangian& L, const Trajectory& tr,
                                    double threshold) {
  const std::size_t n = tr.size();
  if (n < 3) throw InputError("nonsingularity needs at least 3 points");
  NonsingularityReport report;
  report.threshold = threshold;
  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double mu_delta = (tr.mu(i + 1) - tr.mu(i)) / tr.mu(i);
    const double value =
        L.d33(tr.t(i), tr.qs(i), tr.qd(i)) +
        tr.mu(i) * (1.0 + mu_delta) * L.d32(tr.t(i), tr.qs(i), tr.qd(i));
    scale.note(value);
    series[i] = value;
    if (std::abs(value) < threshold) report.singular_indices.push_back(i);
  }
  report.values = make_report(0, std::move(series), scale.value());
  return report;
}

// ---------------------------------------------------------------------------
// Solvers

Trajectory solve_ivp(const AccelerationField& acc, const TimeScale& ts,
                     double q0, double v0) {
  const std::size_t n = ts.size();
  std::vector<double> q(n);
  q[0] = q0;
  double qd = v0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    q[i + 1] = q[i] + ts.mu(i) * qd;
    if (i + 2 < n) {
      AccelState state;
      state.t = ts.point(i);
      state.mu = ts.mu(i);
      state.mu_next = ts.mu(i + 1);
      state.qs = q[i + 1];
      state.qd = qd;
      double h;
      try {
        h = acc.eval(state);
      } catch (const NumericError& err) {
        throw NumericError("solve_ivp failed at step " + std::to_string(i) +
                           ": " + err.what());
      }
      qd += ts.mu(i) * h;
    }
  }
  return Trajectory(ts, std::move(q));
}

Trajectory solve_bvp(const AccelerationField& acc, const TimeScale& ts,
                     double A, double B, double tolerance,
                     int max_iterations) {
  if (ts.size() < 3) throw InputError("solve_bvp needs at least 3 points");
  const double span = ts.point(ts.size() - 1) - ts.point(0);
  const double goal_tol = tolerance * std::max(1.0, std::abs(B));

  auto endpoint_gap = [&](double v0) {
    Trajectory tr = solve_ivp(acc, ts, A, v0);
    return tr.q(ts.size() - 1) - B;
  };

  double v_prev = (B - A) / span;
  double f_prev = endpoint_gap(v_prev);
  if (std::abs(f_prev) <= goal_tol) return solve_ivp(acc, ts, A, v_prev);
  double v = v_prev + 0.1 * std::max(1.0, std::abs(v_prev));
  double f = endpoint_gap(v);

  for (int iter = 0; iter < max_iterations; ++iter) {
    if (std::abs(f) <= goal_tol) return solve_ivp(acc, ts, A, v);
    const double denom = f - f_prev;
    if (denom == 0.0 || !std::isfinite(denom)) {
      throw NumericError("solve_bvp: shooting stalled, bracket [" +
                         std::to_string(v_prev) + ", " + std::to_string(v) +
                         "], endpoint gap " + std::to_string(f));
    }
    const double v_next = v - f * (v - v_prev) / denom;
    if (!std::isfinite(v_next)) {
      throw NumericError("solve_bvp: shooting diverged, bracket [" +
                         std::to_string(v_prev) + ", " + std::to_string(v) + "]");
    }
    v_prev = v;
    f_prev = f;
    v = v_next;
    f = endpoint_gap(v);
  }
  throw NumericError("solve_bvp: no convergence after " +
                     std::to_string(max_iterations) + " iterations, bracket [" +
                     std::to_string(v_prev) + ", " + std::to_string(v) +
                     "], endpoint gap " + std::to_string(f));
}

}  // namespace tsvar
