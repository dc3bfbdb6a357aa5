#include "tsvar/symmetry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "tsvar/errors.hpp"

namespace tsvar {

namespace {

void check_generator(const Expression& e, const char* role) {
  const Alphabet& allowed = generator_alphabet();
  for (const auto& name : e.free_variables()) {
    if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
      throw InputError(std::string(role) + " may not reference '" + name +
                       "' (generators see t and q only)");
    }
  }
}

std::vector<double> sample_generator(const Expression& e, const Trajectory& tr) {
  std::vector<double> values(tr.size());
  Bindings b;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    b.set("t", tr.t(i));
    b.set("q", tr.q(i));
    values[i] = e.evaluate(b);
  }
  return values;
}

std::vector<double> ladder(const TimeScale& ts, const std::vector<double>& v) {
  if (v.size() < 2) return {};
  std::vector<double> out(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    out[i] = (v[i + 1] - v[i]) / ts.mu(i);
  return out;
}

AccelState state_at(const Trajectory& tr, std::size_t i) {
  AccelState s;
  s.t = tr.t(i);
  s.mu = tr.mu(i);
  s.mu_next = tr.mu(i + 1);
  s.qs = tr.qs(i);
  s.qd = tr.qd(i);
  return s;
}

}  // namespace

GeneratorPair GeneratorPair::parse(std::string_view tau_text,
                                   std::string_view xi_text) {
  return GeneratorPair{parse_expression(tau_text, generator_alphabet()),
                       parse_expression(xi_text, generator_alphabet())};
}

GeneratorLadders build_ladders(const GeneratorPair& gen, const Trajectory& tr) {
  check_generator(gen.tau, "tau");
  check_generator(gen.xi, "xi");
  const TimeScale& ts = tr.scale();

  GeneratorLadders lad;
  lad.tau = sample_generator(gen.tau, tr);
  lad.xi = sample_generator(gen.xi, tr);
  lad.tau_d = ladder(ts, lad.tau);
  lad.xi_d = ladder(ts, lad.xi);
  lad.tau_dd = ladder(ts, lad.tau_d);
  lad.xi_dd = ladder(ts, lad.xi_d);
  lad.mu_tau_d.resize(lad.tau_d.size());
  for (std::size_t i = 0; i < lad.tau_d.size(); ++i)
    lad.mu_tau_d[i] = ts.mu(i) * lad.tau_d[i];
  lad.mu_tau_d_d = ladder(ts, lad.mu_tau_d);
  return lad;
}

namespace {

struct X1Terms {
  double value = 0.0;   // X1 F
  double max_term = 0.0;
};

// X1 F from precomputed ladders and the partials of F supplied as callables.
template <typename Ft, typename Fqs, typename Fqd>
X1Terms x1_apply(const GeneratorLadders& lad, const Trajectory& tr,
                 std::size_t i, Ft&& f_t, Fqs&& f_qs, Fqd&& f_qd) {
  const double term_t = lad.tau[i] * f_t(i);
  const double term_qs = lad.xi[i + 1] * f_qs(i);
  const double term_qd = (lad.xi_d[i] - lad.tau_d[i] * tr.qds(i)) * f_qd(i);
  X1Terms out;
  out.value = term_t + term_qs + term_qd;
  out.max_term = std::max({std::abs(term_t), std::abs(term_qs), std::abs(term_qd)});
  return out;
}

}  // namespace

double apply_X1(const GeneratorPair& gen, const Expression& F,
                const Trajectory& tr, std::size_t i) {
  if (i + 2 >= tr.size()) {
    throw InputError("apply_X1: index outside the ladder domain");
  }
  const GeneratorLadders lad = build_ladders(gen, tr);
  const Expression F_t = F.differentiate("t");
  const Expression F_qs = F.differentiate("qs");
  const Expression F_qd = F.differentiate("qd");
  Bindings b;
  auto partial = [&](const Expression& e, std::size_t k) {
    b.set("t", tr.t(k));
    b.set("qs", tr.qs(k));
    b.set("qd", tr.qd(k));
    return e.evaluate(b);
  };
  return x1_apply(
             lad, tr, i, [&](std::size_t k) { return partial(F_t, k); },
             [&](std::size_t k) { return partial(F_qs, k); },
             [&](std::size_t k) { return partial(F_qd, k); })
      .value;
}

namespace {

// Shared evaluation core for the determining residual: one row per point on
// the kappa^3 domain. Exposed this way so the ansatz search can assemble
// per-basis-element columns with the identical arithmetic.
std::vector<double> determining_rows(const GeneratorLadders& lad,
                                     const AccelerationField& acc,
                                     const Trajectory& tr,
                                     ScaleTracker* scale) {
  const std::size_t n = tr.size();
  std::vector<double> rows(n - 3);  // kappa^3: q^ddd is the limiting ladder
  for (std::size_t i = 0; i + 3 < n; ++i) {
    const AccelState st = state_at(tr, i);
    const double h = acc.eval(st);
    const X1Terms x1 = x1_apply(
        lad, tr, i, [&](std::size_t) { return acc.d_t(st); },
        [&](std::size_t) { return acc.d_qs(st); },
        [&](std::size_t) { return acc.d_qd(st); });

    const double coeff_h =
        lad.mu_tau_d_d[i] + 2.0 * lad.tau_d[i] + tr.mu(i) * lad.tau_dd[i];
    const double coeff_qddd =
        tr.mu(i) * lad.mu_tau_d_d[i] + 2.0 * tr.mu(i) * lad.tau_d[i];

    const double term_xidd = lad.xi_dd[i];
    const double term_taudd = lad.tau_dd[i] * tr.qdd(i);
    const double term_h = coeff_h * h;
    const double term_qddd = coeff_qddd * tr.qddd(i);

    if (scale) {
      scale->note(term_xidd);
      scale->note(term_taudd);
      scale->note(term_h);
      scale->note(term_qddd);
      scale->note(x1.max_term);
    }
    rows[i] = term_xidd - term_taudd - term_h - term_qddd - x1.value;
  }
  return rows;
}

}  // namespace

ResidualReport determining_residual(const GeneratorPair& gen,
                                    const AccelerationField& acc,
                                    const Trajectory& tr) {
  if (tr.size() < 5) {
    throw InputError("determining_residual needs at least 5 points");
  }
  const GeneratorLadders lad = build_ladders(gen, tr);
  ScaleTracker scale;
  std::vector<double> rows = determining_rows(lad, acc, tr, &scale);
  return make_report(0, std::move(rows), scale.value());
}

namespace {

struct StructureTerms {
  double sum_without_gauge = 0.0;  // L tau^d + X1 L + d3L mu tau^d q^dd
  double max_term = 0.0;
};

StructureTerms structure_terms(const GeneratorLadders& lad, const Lagrangian& L,
                               const Trajectory& tr, std::size_t i) {
  const double t = tr.t(i), qs = tr.qs(i), qd = tr.qd(i);
  const double term_L = L.L(t, qs, qd) * lad.tau_d[i];
  Bindings b;
  b.set("t", t);
  b.set("qs", qs);
  b.set("qd", qd);
  const X1Terms x1 = x1_apply(
      lad, tr, i, [&](std::size_t) { return L.d1_expr().evaluate(b); },
      [&](std::size_t) { return L.d2_expr().evaluate(b); },
      [&](std::size_t) { return L.d3_expr().evaluate(b); });
  const double term_dd =
      L.d3(t, qs, qd) * tr.mu(i) * lad.tau_d[i] * tr.qdd(i);
  StructureTerms out;
  out.sum_without_gauge = term_L + x1.value + term_dd;
  out.max_term = std::max({std::abs(term_L), x1.max_term, std::abs(term_dd)});
  return out;
}

}  // namespace

GaugeFunction solve_gauge(const GeneratorPair& gen, const Lagrangian& L,
                          const Trajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("solve_gauge needs at least 4 points");
  const GeneratorLadders lad = build_ladders(gen, tr);

  GaugeFunction g;
  g.delta.resize(n - 2);  // G^delta lives where qdd and q^ds exist
  g.values.resize(n - 1);
  g.values[0] = 0.0;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    g.delta[i] = -structure_terms(lad, L, tr, i).sum_without_gauge;
    g.values[i + 1] = g.values[i] + tr.mu(i) * g.delta[i];
  }
  return g;
}

ResidualReport structure_residual(const GeneratorPair& gen, const Lagrangian& L,
                                  const GaugeFunction& G, const Trajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("structure_residual needs at least 4 points");
  if (G.delta.size() + 2 != n) {
    throw InputError("structure_residual: gauge does not match the trajectory");
  }
  const GeneratorLadders lad = build_ladders(gen, tr);
  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const StructureTerms terms = structure_terms(lad, L, tr, i);
    scale.note(terms.max_term);
    scale.note(G.delta[i]);
    series[i] = terms.sum_without_gauge + G.delta[i];
  }
  return make_report(0, std::move(series), scale.value());
}

ResidualReport noether_residual(const GeneratorPair& gen, const Lagrangian& L,
                                const GaugeFunction& G, const Trajectory& tr) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("noether_residual needs at least 4 points");
  if (G.delta.size() + 2 != n) {
    throw InputError("noether_residual: gauge does not match the trajectory");
  }
  const GeneratorLadders lad = build_ladders(gen, tr);
  std::vector<double> series(n - 2);
  ScaleTracker scale;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double t = tr.t(i), qs = tr.qs(i), qd = tr.qd(i);
    const double term_1 = L.d1(t, qs, qd) * lad.tau[i];
    const double term_2 = L.d2(t, qs, qd) * lad.xi[i + 1];
    const double term_3 = L.d3(t, qs, qd) * lad.xi_d[i];
    const double term_L = L.L(t, qs, qd) * lad.tau_d[i];
    const double term_qd = L.d3(t, qs, qd) * lad.tau_d[i] * qd;
    scale.note(term_1);
    scale.note(term_2);
    scale.note(term_3);
    scale.note(term_L);
    scale.note(term_qd);
    scale.note(G.delta[i]);
    series[i] = term_1 + term_2 + term_3 + term_L - term_qd + G.delta[i];
  }
  return make_report(0, std::move(series), scale.value());
}

ResidualReport thm4_gap(const GeneratorPair& gen, const Lagrangian& L,
                        const GaugeFunction& G, const Trajectory& tr) {
  const ResidualReport structure = structure_residual(gen, L, G, tr);
  const ResidualReport noether = noether_residual(gen, L, G, tr);
  std::vector<double> series(structure.series.size());
  for (std::size_t k = 0; k < series.size(); ++k)
    series[k] = structure.series[k] - noether.series[k];
  return make_report(structure.first, std::move(series),
                     std::max(structure.scale, noether.scale));
}

ConservedSeries conserved_series(const GeneratorPair& gen, const Lagrangian& L,
                                 const GaugeFunction& G, const Trajectory& tr,
                                 bool include_gauge) {
  const std::size_t n = tr.size();
  if (n < 4) throw InputError("conserved_series needs at least 4 points");
  if (G.values.size() + 1 != n) {
    throw InputError("conserved_series: gauge does not match the trajectory");
  }
  const GeneratorLadders lad = build_ladders(gen, tr);

  ConservedSeries series;
  series.include_gauge = include_gauge;
  series.values.resize(n - 2);  // kappa^2 domain
  ScaleTracker scale;
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const double t = tr.t(i), qs = tr.qs(i), qd = tr.qd(i);
    const double term_xi = L.d3(t, qs, qd) * lad.xi[i];
    const double bracket =
        L.L(t, qs, qd) - L.d3(t, qs, qd) * qd - L.d1(t, qs, qd) * tr.mu(i);
    const double term_tau = bracket * lad.tau[i];
    double value = term_xi + term_tau;
    scale.note(term_xi);
    scale.note(term_tau);
    if (include_gauge) {
      value += G.values[i];
      scale.note(G.values[i]);
    }
    series.values[i] = value;
  }
  series.scale = std::max(scale.value(), 0.0);
  for (double v : series.values)
    series.drift = std::max(series.drift, std::abs(v - series.values.front()));
  return series;
}

// ---------------------------------------------------------------------------
// Ansatz search

namespace {

GeneratorPair assemble_candidate(const std::vector<Expression>& basis_tau,
                                 const std::vector<Expression>& basis_xi,
                                 const std::vector<double>& coeffs) {
  Expression tau = Expression::constant(0.0);
  Expression xi = Expression::constant(0.0);
  double max_coeff = 0.0;
  for (double c : coeffs) max_coeff = std::max(max_coeff, std::abs(c));
  const double drop = 1e-12 * max_coeff;
  for (std::size_t j = 0; j < basis_tau.size(); ++j) {
    if (std::abs(coeffs[j]) <= drop) continue;
    tau = Expression::add(tau, Expression::mul(Expression::constant(coeffs[j]),
                                               basis_tau[j]));
  }
  for (std::size_t k = 0; k < basis_xi.size(); ++k) {
    const double c = coeffs[basis_tau.size() + k];
    if (std::abs(c) <= drop) continue;
    xi = Expression::add(xi, Expression::mul(Expression::constant(c), basis_xi[k]));
  }
  return GeneratorPair{std::move(tau), std::move(xi)};
}

}  // namespace

std::vector<SearchCandidate> search_generators(
    const std::vector<Expression>& basis_tau,
    const std::vector<Expression>& basis_xi, const AccelerationField& acc,
    const std::vector<Trajectory>& trajectories, SearchOptions options) {
  const std::size_t n_tau = basis_tau.size();
  const std::size_t n_xi = basis_xi.size();
  const std::size_t n_cols = n_tau + n_xi;
  if (n_cols == 0) throw InputError("search_generators: both bases are empty");
  if (trajectories.empty()) {
    throw InputError("search_generators: no trajectories supplied");
  }
  for (const auto& e : basis_tau) check_generator(e, "tau basis element");
  for (const auto& e : basis_xi) check_generator(e, "xi basis element");

  std::size_t n_rows = 0;
  for (const auto& tr : trajectories) {
    if (tr.size() < 5) {
      throw InputError("search_generators: every trajectory needs at least 5 points");
    }
    n_rows += tr.size() - 3;
  }

  // One column of determining-equation rows per basis element; the residual
  // is linear in the generator pair, so columns superpose.
  Eigen::MatrixXd A(n_rows, n_cols);
  const Expression zero = Expression::constant(0.0);
  std::size_t row0 = 0;
  for (const auto& tr : trajectories) {
    for (std::size_t col = 0; col < n_cols; ++col) {
      GeneratorPair unit{col < n_tau ? basis_tau[col] : zero,
                         col < n_tau ? zero : basis_xi[col - n_tau]};
      const GeneratorLadders lad = build_ladders(unit, tr);
      const std::vector<double> rows = determining_rows(lad, acc, tr, nullptr);
      for (std::size_t r = 0; r < rows.size(); ++r)
        A(row0 + r, col) = rows[r];
    }
    row0 += tr.size() - 3;
  }

  // Normal-equations eigenbasis; sizes here are tiny. Eigenvalues of A^T A
  // cannot resolve singular values below sqrt(machine eps) relative, so the
  // null test reuses ||A v|| directly.
  Eigen::MatrixXd M = A.transpose() * A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
  if (eig.info() != Eigen::Success) {
    throw NumericError("search_generators: eigen decomposition failed");
  }

  std::vector<Eigen::VectorXd> directions;
  std::vector<double> direction_norms;
  double sigma_max = 0.0;
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    const Eigen::VectorXd v = eig.eigenvectors().col(j);
    const double norm = (A * v).norm();
    directions.push_back(v);
    direction_norms.push_back(norm);
    sigma_max = std::max(sigma_max, norm);
  }

  const double null_cut = options.null_threshold * std::max(sigma_max, 1e-300);
  std::vector<std::size_t> null_set;
  for (std::size_t j = 0; j < directions.size(); ++j) {
    if (direction_norms[j] <= null_cut) null_set.push_back(j);
  }

  std::vector<Eigen::VectorXd> candidates;
  if (null_set.size() >= 2) {
    // Rank-deficient normalization: several independent directions satisfy
    // the determining equation. Reduce the null basis to row-echelon form so
    // each candidate pivots on a single basis element where possible.
    Eigen::MatrixXd V(null_set.size(), n_cols);
    for (std::size_t r = 0; r < null_set.size(); ++r)
      V.row(r) = directions[null_set[r]].transpose();
    std::size_t pivot_row = 0;
    for (std::size_t col = 0; col < n_cols && pivot_row < null_set.size(); ++col) {
      std::size_t best = pivot_row;
      for (std::size_t r = pivot_row + 1; r < null_set.size(); ++r) {
        if (std::abs(V(r, col)) > std::abs(V(best, col))) best = r;
      }
      if (std::abs(V(best, col)) < 1e-10) continue;
      V.row(best).swap(V.row(pivot_row));
      V.row(pivot_row) /= V(pivot_row, col);
      for (std::size_t r = 0; r < null_set.size(); ++r) {
        if (r != pivot_row) V.row(r) -= V(r, col) * V.row(pivot_row);
      }
      ++pivot_row;
    }
    for (std::size_t r = 0; r < null_set.size(); ++r) {
      Eigen::VectorXd v = V.row(r).transpose();
      const double norm = v.norm();
      if (norm > 0.0) candidates.push_back(v / norm);
    }
  } else if (null_set.size() == 1) {
    candidates.push_back(directions[null_set[0]]);
  }
  if (candidates.empty()) {
    // Nothing below threshold: report the best few directions anyway.
    candidates = directions;
  }

  std::vector<SearchCandidate> out;
  for (const auto& v : candidates) {
    SearchCandidate cand;
    std::vector<double> coeffs(n_cols);
    for (std::size_t j = 0; j < n_cols; ++j) coeffs[j] = v(static_cast<Eigen::Index>(j));
    cand.tau_coefficients.assign(coeffs.begin(), coeffs.begin() + n_tau);
    cand.xi_coefficients.assign(coeffs.begin() + n_tau, coeffs.end());
    cand.residual_rms =
        (A * v).norm() / std::sqrt(static_cast<double>(std::max<std::size_t>(n_rows, 1)));
    cand.gen = assemble_candidate(basis_tau, basis_xi, coeffs);
    out.push_back(std::move(cand));
  }

  std::stable_sort(out.begin(), out.end(),
                   [](const SearchCandidate& a, const SearchCandidate& b) {
                     return a.residual_rms < b.residual_rms;
                   });
  if (out.size() > options.max_candidates) out.resize(options.max_candidates);
  return out;
}

}  // namespace tsvar
