#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsvar/discrete.hpp"
#include "tsvar/dynamics.hpp"
#include "tsvar/expr.hpp"
#include "tsvar/timescale.hpp"

namespace tsvar {

struct TimescaleSpec {
  ScaleKind kind = ScaleKind::Uniform;
  double a = 0.0, b = 1.0;        // uniform
  double t0 = 1.0, ratio = 2.0;   // geometric
  std::size_t count = 2;
  std::vector<double> points;     // explicit

  TimeScale build() const;
};

struct GeneratorSpec {
  std::string name;
  Expression tau;
  Expression xi;
};

/// One verification problem, loaded from the line-oriented sectioned
/// key=value format: [timescale], [lagrangian], [acceleration],
/// [generator <name>], [initial], [boundary], [tolerances], [flags].
struct ProblemSpec {
  TimescaleSpec timescale;
  Expression lagrangian;
  std::optional<Expression> acceleration;
  std::vector<GeneratorSpec> generators;
  std::optional<std::pair<double, double>> initial;   // q0, v0
  std::optional<std::pair<double, double>> boundary;  // A, B
  double residual_tol = 1e-9;
  double drift_tol = 1e-9;
  bool include_gauge = true;
  DuboisVariant dubois_variant = DuboisVariant::Printed;
  DiscreteElVariant discrete_variant = DiscreteElVariant::Reconciled;
};

ProblemSpec load_problem(const std::string& path);
ProblemSpec parse_problem(const std::string& text, const std::string& origin);

/// Ansatz basis for the generator search: repeated `tau = <expr>` and
/// `xi = <expr>` lines, comments and blanks allowed.
struct SearchBasis {
  std::vector<Expression> tau;
  std::vector<Expression> xi;
};

SearchBasis load_basis(const std::string& path);

}  // namespace tsvar
