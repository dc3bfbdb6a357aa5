#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "tsvar/dynamics.hpp"
#include "tsvar/errors.hpp"

using namespace tsvar;

namespace {

// The worked nonuniform system: dyadic scale, L = t + qs*qd, equation of
// motion q^dd = -q^d/(2t). With q(1) = 0, q'(1) = 1 the solution is
// q(2^n) = n, q^d(2^n) = 2^-n (the velocity halves every step, hand
// recurrence from qd_{i+1} = qd_i + mu_i * h_i with mu = t).
Lagrangian worked_lagrangian() { return Lagrangian::parse("t + qs*qd"); }

AccelerationField worked_explicit() {
  return AccelerationField::from_expression(
      parse_expression("-qd/(2*t)", acceleration_alphabet()));
}

Trajectory worked_closed_form(std::size_t count, double q0, double v0) {
  const TimeScale ts = TimeScale::geometric(1.0, 2.0, count);
  std::vector<double> q(count);
  for (std::size_t n = 0; n < count; ++n) q[n] = q0 + v0 * static_cast<double>(n);
  return Trajectory(ts, std::move(q));
}

// Unit-lattice oscillator L = qd^2/2 - qs^2/2, hand recurrence
// qd_{i+1} = qd_i - q_{i+1}: unit seed gives the period-6 pattern
// q = 0,1,1,0,-1,-1,0,... and qd = 1,0,-1,-1,0,1,...
Lagrangian oscillator_lagrangian() { return Lagrangian::parse("qd^2/2 - qs^2/2"); }

}  // namespace

TEST_CASE("lagrangian caches structural partials") {
  const Lagrangian L = worked_lagrangian();
  CHECK(structurally_equal(L.d3_expr(), L.expr().differentiate("qd")));
  CHECK(structurally_equal(L.d2_expr(), L.expr().differentiate("qs")));
  CHECK(L.d1(3.0, 5.0, 7.0) == 1.0);
  CHECK(L.d2(3.0, 5.0, 7.0) == 7.0);
  CHECK(L.d3(3.0, 5.0, 7.0) == 5.0);
  CHECK_THROWS_AS(Lagrangian::parse("t + q"), InputError);
}

TEST_CASE("trajectory ladders satisfy the shift identity") {
  auto gen = testsupport::rng(1234);
  const TimeScale ts = testsupport::random_scale(gen, 10, 30);
  std::vector<double> q(ts.size());
  for (auto& v : q) v = testsupport::uniform(gen, -2.0, 2.0);
  const Trajectory tr(ts, q);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double recon = tr.q(i) + tr.mu(i) * tr.qd(i);
    CHECK(std::abs(recon - tr.q(i + 1)) <= 1e-12 * std::max(1.0, std::abs(tr.q(i + 1))));
  }
  for (std::size_t i = 0; i + 2 < ts.size(); ++i) {
    const double recon = tr.qd(i) + tr.mu(i) * tr.qdd(i);
    CHECK(std::abs(recon - tr.qd(i + 1)) <= 1e-12 * std::max(1.0, std::abs(tr.qd(i + 1))));
  }
}

TEST_CASE("el_residual on the worked closed form") {
  const Lagrangian L = worked_lagrangian();
  const Trajectory tr = worked_closed_form(12, 0.0, 1.0);
  const ResidualReport r = el_residual(L, tr);
  CHECK(r.size() == tr.size() - 2);
  CHECK(r.relative_max() <= 1e-12);

  // Free particle: linear q on any scale has zero residual.
  auto gen = testsupport::rng(99);
  const TimeScale ts = testsupport::random_scale(gen, 8, 20);
  std::vector<double> q(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) q[i] = 0.7 + 1.3 * ts.point(i);
  const ResidualReport free_r =
      el_residual(Lagrangian::parse("qd^2/2"), Trajectory(ts, q));
  CHECK(free_r.relative_max() <= 1e-13);
}

TEST_CASE("el_residual flags a perturbed trajectory") {
  const Lagrangian L = worked_lagrangian();
  const TimeScale ts = TimeScale::geometric(1.0, 2.0, 12);
  std::vector<double> q(ts.size());
  for (std::size_t n = 0; n < ts.size(); ++n) q[n] = static_cast<double>(n);
  q[5] += 1e-3;
  const ResidualReport r = el_residual(L, Trajectory(ts, q));
  CHECK(r.max_abs > 1e-4);
}

TEST_CASE("dubois printed form fails on the worked system, sigma form resolves it") {
  const Lagrangian L = worked_lagrangian();
  const Trajectory tr = worked_closed_form(12, 0.0, 1.0);

  // -L + d3L qd + d1L mu = -t - qs qd + qs qd + mu = 0 on mu = t, so the
  // printed equation reduces to 0 + d1L = 1 identically.
  const ResidualReport printed = dubois_residual(L, tr, DuboisVariant::Printed);
  for (double v : printed.series) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // L - d3L qd = t, so D/Dt[t] = 1 = d1L^sigma and the sigma form closes.
  const ResidualReport sigma = dubois_residual(L, tr, DuboisVariant::SigmaForm);
  CHECK(sigma.max_abs <= 1e-12);
}

TEST_CASE("dubois printed form is nonzero for the discrete oscillator") {
  const TimeScale ts = TimeScale::uniform(0.0, 9.0, 10);
  const AccelerationField acc = AccelerationField::from_lagrangian(oscillator_lagrangian());
  const Trajectory tr = solve_ivp(acc, ts, 0.0, 1.0);
  const ResidualReport printed =
      dubois_residual(oscillator_lagrangian(), tr, DuboisVariant::Printed);
  // Hand value: the energy-like series E_i = qd_i^2/2 + q_{i+1}^2/2 runs
  // 1, 1/2, ... so the first printed residual is -1/2. Nonzero is the point.
  CHECK(printed.series[0] == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(printed.max_abs >= 0.5 - 1e-12);
}

TEST_CASE("nonsingularity values") {
  const Trajectory tr = worked_closed_form(10, 0.0, 1.0);

  // Worked system: 0 + mu(1 + mu^delta) * 1 = t * 2 = 2t.
  const NonsingularityReport worked = nonsingularity(worked_lagrangian(), tr);
  for (std::size_t k = 0; k < worked.values.series.size(); ++k) {
    CHECK(worked.values.series[k] ==
          doctest::Approx(2.0 * tr.t(k)).epsilon(1e-13));
  }
  CHECK(worked.nonsingular());

  const NonsingularityReport free_particle =
      nonsingularity(Lagrangian::parse("qd^2/2"), tr);
  for (double v : free_particle.values.series) CHECK(v == 1.0);

  const NonsingularityReport linear = nonsingularity(Lagrangian::parse("qd"), tr);
  for (double v : linear.values.series) CHECK(v == 0.0);
  CHECK(!linear.nonsingular());
  CHECK(linear.singular_indices.size() == linear.values.series.size());
}

TEST_CASE("implicit acceleration matches the printed equation of motion") {
  const AccelerationField implicit =
      AccelerationField::from_lagrangian(worked_lagrangian());
  const AccelerationField explicit_h = worked_explicit();

  auto gen = testsupport::rng(31337);
  for (int trial = 0; trial < 25; ++trial) {
    AccelState s;
    const int n = static_cast<int>(gen() % 10);
    s.t = std::ldexp(1.0, n);  // 2^n
    s.mu = s.t;
    s.mu_next = 2.0 * s.t;
    s.qs = testsupport::uniform(gen, -3.0, 3.0);
    s.qd = testsupport::uniform(gen, -3.0, 3.0);
    const double expect = -s.qd / (2.0 * s.t);
    CHECK(std::abs(implicit.eval(s) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    CHECK(std::abs(explicit_h.eval(s) - expect) <= 1e-15);
  }
}

TEST_CASE("free particle acceleration is zero; linear lagrangian is singular") {
  const AccelerationField free_acc =
      AccelerationField::from_lagrangian(Lagrangian::parse("qd^2/2"));
  AccelState s{1.0, 0.5, 0.5, 2.0, 3.0};
  CHECK(free_acc.eval(s) == 0.0);

  const AccelerationField singular =
      AccelerationField::from_lagrangian(Lagrangian::parse("qd"));
  CHECK_THROWS_AS(singular.eval(s), NumericError);
}

TEST_CASE("solve_ivp reproduces the worked closed form exactly") {
  const TimeScale ts = TimeScale::geometric(1.0, 2.0, 21);
  const AccelerationField acc =
      AccelerationField::from_lagrangian(worked_lagrangian());
  const Trajectory tr = solve_ivp(acc, ts, 0.0, 1.0);
  for (std::size_t n = 0; n < ts.size(); ++n) {
    CHECK(tr.q(n) == static_cast<double>(n));  // exact in dyadic arithmetic
  }
  for (std::size_t n = 0; n + 1 < ts.size(); ++n) {
    CHECK(tr.qd(n) == std::ldexp(1.0, -static_cast<int>(n)));  // 2^-n
  }
}

TEST_CASE("solve_ivp oscillator pattern on the unit lattice") {
  const TimeScale ts = TimeScale::uniform(0.0, 12.0, 13);
  const AccelerationField acc =
      AccelerationField::from_lagrangian(oscillator_lagrangian());
  const Trajectory tr = solve_ivp(acc, ts, 0.0, 1.0);
  const std::vector<double> expect_q = {0, 1, 1, 0, -1, -1, 0, 1, 1, 0, -1, -1, 0};
  for (std::size_t i = 0; i < expect_q.size(); ++i) CHECK(tr.q(i) == expect_q[i]);
  const std::vector<double> expect_qd = {1, 0, -1, -1, 0, 1, 1, 0, -1, -1, 0, 1};
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) CHECK(tr.qd(i) == expect_qd[i]);
}

TEST_CASE("free particle integrates exactly on any scale") {
  auto gen = testsupport::rng(60601);
  const TimeScale ts = testsupport::random_scale(gen, 10, 40);
  const AccelerationField acc =
      AccelerationField::from_lagrangian(Lagrangian::parse("qd^2/2"));
  const Trajectory tr = solve_ivp(acc, ts, 0.5, -0.75);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double expect = 0.5 - 0.75 * (ts.point(i) - ts.point(0));
    CHECK(std::abs(tr.q(i) - expect) <= 1e-13 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("implicit solves keep the el residual at solver tolerance") {
  auto gen = testsupport::rng(112233);
  for (int trial = 0; trial < 10; ++trial) {
    const TimeScale ts = testsupport::random_scale(gen, 20, 50);
    const Lagrangian L = testsupport::random_lagrangian(gen);
    const AccelerationField acc = AccelerationField::from_lagrangian(L);
    const Trajectory tr = solve_ivp(acc, ts, testsupport::uniform(gen, -1, 1),
                                    testsupport::uniform(gen, -1, 1));
    const ResidualReport r = el_residual(L, tr);
    CHECK(r.relative_max() <= 1e-11);  // 10x the root-solve tolerance
  }
}

TEST_CASE("explicit and implicit acceleration agree along solved trajectories") {
  const TimeScale ts = TimeScale::geometric(1.0, 2.0, 21);
  const AccelerationField implicit =
      AccelerationField::from_lagrangian(worked_lagrangian());
  const AccelerationField explicit_h = worked_explicit();
  const Trajectory tr = solve_ivp(implicit, ts, 0.0, 1.0);
  for (std::size_t i = 0; i + 2 < ts.size(); ++i) {
    AccelState s{tr.t(i), tr.mu(i), tr.mu(i + 1), tr.qs(i), tr.qd(i)};
    CHECK(std::abs(implicit.eval(s) - explicit_h.eval(s)) <= 1e-10);
  }
}

TEST_CASE("solve_bvp recovers boundary data") {
  // Free particle on [0, 1]: straight line with v0 = 1.
  const TimeScale lattice = TimeScale::uniform(0.0, 1.0, 11);
  const AccelerationField free_acc =
      AccelerationField::from_lagrangian(Lagrangian::parse("qd^2/2"));
  const Trajectory line = solve_bvp(free_acc, lattice, 0.0, 1.0);
  CHECK(std::abs(line.q(10) - 1.0) <= 1e-10);
  CHECK(std::abs(line.qd(0) - 1.0) <= 1e-10);

  // Worked system: q(1) = 0, q(16) = 4 recovers the unit seed.
  const TimeScale dyadic = TimeScale::geometric(1.0, 2.0, 5);
  const AccelerationField acc =
      AccelerationField::from_lagrangian(worked_lagrangian());
  const Trajectory tr = solve_bvp(acc, dyadic, 0.0, 4.0);
  CHECK(std::abs(tr.qd(0) - 1.0) <= 1e-10);
  const ResidualReport r = el_residual(worked_lagrangian(), tr);
  CHECK(r.relative_max() <= 1e-11);
}

TEST_CASE("solve_bvp reports unreachable boundary data") {
  // Oscillator over one full period: q(6) = 0 for every v0, so B = 1 is
  // out of reach and the secant update degenerates.
  const TimeScale ts = TimeScale::uniform(0.0, 6.0, 7);
  const AccelerationField acc =
      AccelerationField::from_lagrangian(oscillator_lagrangian());
  CHECK_THROWS_AS(solve_bvp(acc, ts, 0.0, 1.0), NumericError);
}
