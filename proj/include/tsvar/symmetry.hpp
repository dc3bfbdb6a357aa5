#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsvar/dynamics.hpp"
#include "tsvar/expr.hpp"
#include "tsvar/report.hpp"
#include "tsvar/timescale.hpp"

namespace tsvar {

/// Candidate infinitesimal symmetry: tau(t, q) acts on time, xi(t, q) on the
/// coordinate.
struct GeneratorPair {
  Expression tau;
  Expression xi;

  static GeneratorPair parse(std::string_view tau_text, std::string_view xi_text);
};

/// Generator values and their delta ladders along a trajectory. xi^delta is
/// the delta derivative of the composite i -> xi(t_i, q_i); no chain rule is
/// assumed anywhere. The composite mu*tau^delta and its derivative appear as
/// coefficients in the determining equation.
struct GeneratorLadders {
  std::vector<double> tau, xi;          // on all points
  std::vector<double> tau_d, xi_d;      // kappa
  std::vector<double> tau_dd, xi_dd;    // kappa^2
  std::vector<double> mu_tau_d;         // mu_i * tau^delta_i, kappa
  std::vector<double> mu_tau_d_d;       // its delta derivative, kappa^2
};

GeneratorLadders build_ladders(const GeneratorPair& gen, const Trajectory& tr);

/// First prolongation applied to F(t, q^sigma, q^delta) at point i:
/// X1 F = tau dF/dt + xi^sigma dF/dqs + (xi^delta - tau^delta q^ds) dF/dqd.
double apply_X1(const GeneratorPair& gen, const Expression& F,
                const Trajectory& tr, std::size_t i);

/// On-shell residual of the determining equation on the kappa^3 domain.
ResidualReport determining_residual(const GeneratorPair& gen,
                                    const AccelerationField& acc,
                                    const Trajectory& tr);

/// Gauge function G accumulated from the structure equation with the
/// normalization G(t_0) = 0 (the additive constant is a free gauge).
struct GaugeFunction {
  std::vector<double> values;  // G_i for i in [0, N-2]
  std::vector<double> delta;   // G^delta_i for i in [0, N-3]
};

GaugeFunction solve_gauge(const GeneratorPair& gen, const Lagrangian& L,
                          const Trajectory& tr);

/// Structure-equation residual L tau^d + X1 L + d3L mu tau^d q^dd + G^d.
ResidualReport structure_residual(const GeneratorPair& gen, const Lagrangian& L,
                                  const GaugeFunction& G, const Trajectory& tr);

/// Noether-identity residual
/// d1L tau + d2L xi^s + d3L xi^d + L tau^d - d3L tau^d q^d + G^d.
ResidualReport noether_residual(const GeneratorPair& gen, const Lagrangian& L,
                                const GaugeFunction& G, const Trajectory& tr);

/// structure_residual minus noether_residual; algebraically zero through
/// q^ds = q^d + mu q^dd.
ResidualReport thm4_gap(const GeneratorPair& gen, const Lagrangian& L,
                        const GaugeFunction& G, const Trajectory& tr);

/// I = d3L xi + [L - d3L q^d - d1L mu] tau (+ G). The gauge term defaults
/// to included: the conservation proof differentiates I + G, and the worked
/// nonuniform example's conserved value equals d3L xi + G.
struct ConservedSeries {
  std::size_t first = 0;
  std::vector<double> values;
  double drift = 0.0;
  double scale = 0.0;
  bool include_gauge = true;
  double relative_drift() const {
    if (drift == 0.0) return 0.0;
    return scale > 0.0 ? drift / scale : drift;
  }
};

ConservedSeries conserved_series(const GeneratorPair& gen, const Lagrangian& L,
                                 const GaugeFunction& G, const Trajectory& tr,
                                 bool include_gauge = true);

/// Ansatz search: tau = sum a_j b_j, xi = sum c_k e_k. The determining
/// residual is linear in the generator ladders, so the rows over all sample
/// points of all trajectories form a homogeneous least-squares system. The
/// near-null space (singular directions below `null_threshold` relative) is
/// reduced to basis-aligned representatives by Gauss-Jordan elimination, so
/// degenerate symmetry families come out as separate readable candidates.
struct SearchOptions {
  double null_threshold = 1e-10;
  std::size_t max_candidates = 8;
};

struct SearchCandidate {
  GeneratorPair gen;
  std::vector<double> tau_coefficients;
  std::vector<double> xi_coefficients;
  double residual_rms = 0.0;
};

std::vector<SearchCandidate> search_generators(
    const std::vector<Expression>& basis_tau,
    const std::vector<Expression>& basis_xi, const AccelerationField& acc,
    const std::vector<Trajectory>& trajectories, SearchOptions options = {});

}  // namespace tsvar
