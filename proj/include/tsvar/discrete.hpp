#pragma once

#include <cstddef>
#include <vector>

#include "tsvar/dynamics.hpp"
#include "tsvar/expr.hpp"
#include "tsvar/report.hpp"
#include "tsvar/symmetry.hpp"

namespace tsvar {

/// q_k on integer steps k = m0 .. m0+N-1 with forward differences
/// Dq_k = q_{k+1} - q_k, the backward form D1q_k = q_k - q_{k-1} = Dq_{k-1},
/// and the higher forward ladders D2q, D3q.
class DiscreteTrajectory {
public:
  DiscreteTrajectory(long m0, std::vector<double> q);

  /// Reuses a trajectory solved by the general machinery; the scale must be
  /// a unit lattice starting at an integer, so cross-checks compare the
  /// printed formulas, not integrators.
  static DiscreteTrajectory from_trajectory(const Trajectory& tr);

  long m0() const { return m0_; }
  std::size_t size() const { return q_.size(); }

  double t(std::size_t i) const { return static_cast<double>(m0_ + static_cast<long>(i)); }
  double q(std::size_t i) const { return q_.at(i); }
  double dq(std::size_t i) const { return dq_.at(i); }      // Dq_k
  double d1q(std::size_t i) const { return dq_.at(i - 1); } // D1q_k = Dq_{k-1}
  double d2q(std::size_t i) const { return d2q_.at(i); }
  double d3q(std::size_t i) const { return d3q_.at(i); }

private:
  long m0_;
  std::vector<double> q_, dq_, d2q_, d3q_;
};

/// A requested-variant residual together with the pointwise gap
/// printed-minus-reconciled, so the index/term discrepancies of the printed
/// discrete formulas are quantified rather than hidden.
struct DiscreteVariantReport {
  ResidualReport residual;
  std::vector<double> gap;
};

enum class DiscreteElVariant { Printed, Reconciled };

/// Discrete Euler-Lagrange residual at k (needs q_{k-1} and q_{k+1}):
/// Printed:    d3L(k, q_{k+1}, Dq) - d3L(k-1, q_k, D1q) - d2L(k,   q_{k+1}, Dq)
/// Reconciled: d3L(k, q_{k+1}, Dq) - d3L(k-1, q_k, D1q) - d2L(k-1, q_k,  D1q)
/// The reconciled form is the general equation at mu = 1 shifted to k-1.
DiscreteVariantReport discrete_el_residual(const Lagrangian& L,
                                           const DiscreteTrajectory& tr,
                                           DiscreteElVariant variant);

enum class DiscreteDeterminingVariant { Printed, Mu1 };

/// Discrete determining residual; the printed form and the general equation
/// at mu = 1 disagree in the second term (Dq * D2tau vs D2q * D2tau).
DiscreteVariantReport discrete_determining_residual(
    const GeneratorPair& gen, const Expression& h, const DiscreteTrajectory& tr,
    DiscreteDeterminingVariant variant);

/// Discrete gauge accumulated from the discrete structure equation with
/// G(m0) = 0, mirroring solve_gauge at mu = 1.
GaugeFunction discrete_solve_gauge(const GeneratorPair& gen, const Lagrangian& L,
                                   const DiscreteTrajectory& tr);

ResidualReport discrete_structure_residual(const GeneratorPair& gen,
                                           const Lagrangian& L,
                                           const GaugeFunction& G,
                                           const DiscreteTrajectory& tr);

ConservedSeries discrete_conserved(const GeneratorPair& gen, const Lagrangian& L,
                                   const GaugeFunction& G,
                                   const DiscreteTrajectory& tr,
                                   bool include_gauge = true);

ResidualReport discrete_noether_residual(const GeneratorPair& gen,
                                         const Lagrangian& L,
                                         const GaugeFunction& G,
                                         const DiscreteTrajectory& tr);

}  // namespace tsvar
