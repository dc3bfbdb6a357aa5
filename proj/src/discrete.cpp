#include "tsvar/discrete.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsvar/errors.hpp"

namespace tsvar {

DiscreteTrajectory::DiscreteTrajectory(long m0, std::vector<double> q)
    : m0_(m0), q_(std::move(q)) {
  if (q_.size() < 2) {
    throw InputError("discrete trajectory needs at least 2 points");
  }
  dq_.resize(q_.size() - 1);
  for (std::size_t i = 0; i + 1 < q_.size(); ++i) dq_[i] = q_[i + 1] - q_[i];
  d2q_.resize(dq_.size() - 1);
  for (std::size_t i = 0; i + 1 < dq_.size(); ++i) d2q_[i] = dq_[i + 1] - dq_[i];
  if (d2q_.size() >= 2) {
    d3q_.resize(d2q_.size() - 1);
    for (std::size_t i = 0; i + 1 < d2q_.size(); ++i)
      d3q_[i] = d2q_[i + 1] - d2q_[i];
  }
}

DiscreteTrajectory DiscreteTrajectory::from_trajectory(const Trajectory& tr) {
  const TimeScale& ts = tr.scale();
  const double t0 = ts.point(0);
  if (std::abs(t0 - std::rint(t0)) > 1e-9) {
    throw InputError("discrete trajectory needs an integer start point");
  }
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (std::abs(ts.mu(i) - 1.0) > 1e-12) {
      throw InputError("discrete trajectory needs a unit lattice (mu = 1)");
    }
  }
  return DiscreteTrajectory(static_cast<long>(std::llrint(t0)), tr.q_values());
}

namespace {

double eval_state(const Expression& e, double t, double qs, double qd) {
  Bindings b;
  b.set("t", t);
  b.set("qs", qs);
  b.set("qd", qd);
  return e.evaluate(b);
}

std::vector<double> sample_gen(const Expression& e, const DiscreteTrajectory& tr) {
  std::vector<double> out(tr.size());
  Bindings b;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    b.set("t", tr.t(i));
    b.set("q", tr.q(i));
    out[i] = e.evaluate(b);
  }
  return out;
}

std::vector<double> diff(const std::vector<double>& v) {
  if (v.size() < 2) return {};
  std::vector<double> out(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) out[i] = v[i + 1] - v[i];
  return out;
}

}  // namespace

DiscreteVariantReport discrete_el_residual(const Lagrangian& L,
                                           const DiscreteTrajectory& tr,
                                           DiscreteElVariant variant) {
  const std::size_t n = tr.size();
  if (n < 3) throw InputError("discrete_el_residual needs at least 3 points");

  DiscreteVariantReport out;
  std::vector<double> series(n - 2);
  out.gap.resize(n - 2);
  ScaleTracker scale;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double d3_here = L.d3(tr.t(k), tr.q(k + 1), tr.dq(k));
    const double d3_back = L.d3(tr.t(k) - 1.0, tr.q(k), tr.d1q(k));
    const double d2_here = L.d2(tr.t(k), tr.q(k + 1), tr.dq(k));
    const double d2_back = L.d2(tr.t(k) - 1.0, tr.q(k), tr.d1q(k));
    const double printed = d3_here - d3_back - d2_here;
    const double reconciled = d3_here - d3_back - d2_back;
    scale.note(d3_here);
    scale.note(d3_back);
    scale.note(variant == DiscreteElVariant::Printed ? d2_here : d2_back);
    series[k - 1] = variant == DiscreteElVariant::Printed ? printed : reconciled;
    out.gap[k - 1] = printed - reconciled;
  }
  out.residual = make_report(1, std::move(series), scale.value());
  return out;
}

DiscreteVariantReport discrete_determining_residual(
    const GeneratorPair& gen, const Expression& h, const DiscreteTrajectory& tr,
    DiscreteDeterminingVariant variant) {
  const std::size_t n = tr.size();
  if (n < 5) throw InputError("discrete_determining_residual needs at least 5 points");

  const std::vector<double> tau = sample_gen(gen.tau, tr);
  const std::vector<double> xi = sample_gen(gen.xi, tr);
  const std::vector<double> dtau = diff(tau);
  const std::vector<double> dxi = diff(xi);
  const std::vector<double> d2tau = diff(dtau);
  const std::vector<double> d2xi = diff(dxi);

  const Expression h_t = h.differentiate("t");
  const Expression h_qs = h.differentiate("qs");
  const Expression h_qd = h.differentiate("qd");

  DiscreteVariantReport out;
  std::vector<double> series(n - 3);  // D3q is the limiting ladder
  out.gap.resize(n - 3);
  ScaleTracker scale;
  for (std::size_t k = 0; k + 3 < n; ++k) {
    const double t = tr.t(k), qs = tr.q(k + 1), qd = tr.dq(k);
    const double h_here = eval_state(h, t, qs, qd);
    // Prolongation coefficient from the three-point scheme:
    // Dxi - Dtau*Dq - Dtau*D2q, which is the general (xi^d - tau^d q^ds)
    // at mu = 1.
    const double coeff_qd = dxi[k] - dtau[k] * tr.dq(k) - dtau[k] * tr.d2q(k);
    const double x1h = tau[k] * eval_state(h_t, t, qs, qd) +
                       xi[k + 1] * eval_state(h_qs, t, qs, qd) +
                       coeff_qd * eval_state(h_qd, t, qs, qd);

    const double printed = d2xi[k] - tr.dq(k) * d2tau[k] -
                           2.0 * (dtau[k] + d2tau[k]) * tr.d2q(k) -
                           (2.0 * dtau[k] + d2tau[k]) * tr.d3q(k) - x1h;
    const double mu1 = d2xi[k] - tr.d2q(k) * d2tau[k] -
                       (2.0 * d2tau[k] + 2.0 * dtau[k]) * h_here -
                       (d2tau[k] + 2.0 * dtau[k]) * tr.d3q(k) - x1h;
    scale.note(d2xi[k]);
    scale.note(tr.dq(k) * d2tau[k]);
    scale.note(tr.d2q(k) * d2tau[k]);
    scale.note(2.0 * (dtau[k] + d2tau[k]) * tr.d2q(k));
    scale.note((2.0 * dtau[k] + d2tau[k]) * tr.d3q(k));
    scale.note(x1h);
    series[k] = variant == DiscreteDeterminingVariant::Printed ? printed : mu1;
    out.gap[k] = printed - mu1;
  }
  out.residual = make_report(0, std::move(series), scale.value());
  return out;
}

namespace {

struct DiscreteStructureTerms {
  double sum_without_gauge = 0.0;
  double max_term = 0.0;
};

DiscreteStructureTerms discrete_structure_terms(const std::vector<double>& tau,
                                                const std::vector<double>& xi,
                                                const std::vector<double>& dtau,
                                                const std::vector<double>& dxi,
                                                const Lagrangian& L,
                                                const DiscreteTrajectory& tr,
                                                std::size_t k) {
  const double t = tr.t(k), qs = tr.q(k + 1), qd = tr.dq(k);
  const double term_L = L.L(t, qs, qd) * dtau[k];
  const double coeff_qd = dxi[k] - dtau[k] * tr.dq(k) - dtau[k] * tr.d2q(k);
  const double x1L = tau[k] * L.d1(t, qs, qd) + xi[k + 1] * L.d2(t, qs, qd) +
                     coeff_qd * L.d3(t, qs, qd);
  const double term_d2q = L.d3(t, qs, qd) * dtau[k] * tr.d2q(k);
  DiscreteStructureTerms out;
  out.sum_without_gauge = term_L + x1L + term_d2q;
  out.max_term = std::max({std::abs(term_L), std::abs(x1L), std::abs(term_d2q)});
  return out;
}

}  // namespace

GaugeFunction discrete_solve_gauge(const GeneratorPair& gen, const Lagrangian& L,
                                   const DiscreteTrajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("discrete_solve_gauge needs at least 4 points");
  const std::vector<double> tau = sample_gen(gen.tau, tr);
  const std::vector<double> xi = sample_gen(gen.xi, tr);
  const std::vector<double> dtau = diff(tau);
  const std::vector<double> dxi = diff(xi);

  GaugeFunction g;
  g.delta.resize(n - 2);
  g.values.resize(n - 1);
  g.values[0] = 0.0;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    g.delta[k] =
        -discrete_structure_terms(tau, xi, dtau, dxi, L, tr, k).sum_without_gauge;
    g.values[k + 1] = g.values[k] + g.delta[k];
  }
  return g;
}

ResidualReport discrete_structure_residual(const GeneratorPair& gen,
                                           const Lagrangian& L,
                                           const GaugeFunction& G,
                                           const DiscreteTrajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("discrete_structure_residual needs at least 4 points");
  if (G.delta.size() + 2 != n) {
    throw InputError("discrete_structure_residual: gauge does not match");
  }
  const std::vector<double> tau = sample_gen(gen.tau, tr);
  const std::vector<double> xi = sample_gen(gen.xi, tr);
  const std::vector<double> dtau = diff(tau);
  const std::vector<double> dxi = diff(xi);

  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const DiscreteStructureTerms terms =
        discrete_structure_terms(tau, xi, dtau, dxi, L, tr, k);
    scale.note(terms.max_term);
    scale.note(G.delta[k]);
    series[k] = terms.sum_without_gauge + G.delta[k];
  }
  return make_report(0, std::move(series), scale.value());
}

ConservedSeries discrete_conserved(const GeneratorPair& gen, const Lagrangian& L,
                                   const GaugeFunction& G,
                                   const DiscreteTrajectory& tr,
                                   bool include_gauge) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("discrete_conserved needs at least 4 points");
  if (G.values.size() + 1 != n) {
    throw InputError("discrete_conserved: gauge does not match");
  }
  const std::vector<double> tau = sample_gen(gen.tau, tr);
  const std::vector<double> xi = sample_gen(gen.xi, tr);

  ConservedSeries series;
  series.include_gauge = include_gauge;
  series.values.resize(n - 2);
  ScaleTracker scale;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const double t = tr.t(k), qs = tr.q(k + 1), qd = tr.dq(k);
    const double term_xi = L.d3(t, qs, qd) * xi[k];
    const double bracket =
        L.L(t, qs, qd) - L.d3(t, qs, qd) * qd - L.d1(t, qs, qd);
    const double term_tau = bracket * tau[k];
    double value = term_xi + term_tau;
    scale.note(term_xi);
    scale.note(term_tau);
    if (include_gauge) {
      value += G.values[k];
      scale.note(G.values[k]);
    }
    series.values[k] = value;
  }
  series.scale = scale.value();
  for (double v : series.values)
    series.drift = std::max(series.drift, std::abs(v - series.values.front()));
  return series;
}

ResidualReport discrete_noether_residual(const GeneratorPair& gen,
                                         const Lagrangian& L,
                                         const GaugeFunction& G,
                                         const DiscreteTrajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("discrete_noether_residual needs at least 4 points");
  if (G.delta.size() + 2 != n) {
    throw InputError("discrete_noether_residual: gauge does not match");
  }
  const std::vector<double> tau = sample_gen(gen.tau, tr);
  const std::vector<double> xi = sample_gen(gen.xi, tr);
  const std::vector<double> dtau = diff(tau);
  const std::vector<double> dxi = diff(xi);

  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const double t = tr.t(k), qs = tr.q(k + 1), qd = tr.dq(k);
    const double term_1 = L.d1(t, qs, qd) * tau[k];
    const double term_2 = L.d2(t, qs, qd) * xi[k + 1];
    const double term_3 = L.d3(t, qs, qd) * dxi[k];
    const double term_L = (L.L(t, qs, qd) - L.d3(t, qs, qd) * qd) * dtau[k];
    scale.note(term_1);
    scale.note(term_2);
    scale.note(term_3);
    scale.note(term_L);
    scale.note(G.delta[k]);
    series[k] = term_1 + term_2 + term_3 + term_L + G.delta[k];
  }
  return make_report(0, std::move(series), scale.value());
}

}  // namespace tsvar
