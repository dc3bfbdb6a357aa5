#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsvar/problem.hpp"
#include "tsvar/symmetry.hpp"

namespace tsvar {

struct GeneratorVerdict {
  std::string name;
  std::string tau_text, xi_text;
  bool tau_is_zero = false;
  double determining_max = 0.0, determining_rel = 0.0;
  double gauge_end = 0.0;          // G at the last defined point
  double conserved_first = 0.0;    // I_0
  double drift = 0.0, drift_rel = 0.0;
  double structure_max = 0.0, noether_max = 0.0, thm4_max = 0.0;
  bool determining_pass = false;
  bool drift_ok = false;
  bool drift_gated = false;  // only tau = 0 generators gate the exit code
};

struct SearchSummary {
  std::vector<std::string> tau_texts, xi_texts;
  std::vector<double> residuals;
};

/// Everything run_problem measured, with the verdicts the exit code is
/// derived from. Verdicts are pure functions of the numbers and tolerances.
struct RunReport {
  std::string problem_path;
  std::string solve_mode;  // "ivp" or "bvp"
  std::size_t points = 0;
  double residual_tol = 0.0, drift_tol = 0.0;
  bool include_gauge = true;

  double el_max = 0.0, el_rel = 0.0;
  bool el_pass = false;
  double dubois_printed_max = 0.0;
  double dubois_sigma_max = 0.0;
  double nonsingular_min = 0.0;
  bool nonsingular_ok = false;
  std::optional<double> accel_agreement;  // explicit vs implicit max gap

  std::vector<GeneratorVerdict> generators;

  bool discrete_checked = false;
  double discrete_el_max = 0.0;
  double discrete_gap_max = 0.0;

  std::optional<SearchSummary> search;

  bool pass() const;
};

struct RunOptions {
  std::optional<double> residual_tol;
  std::optional<double> drift_tol;
  std::optional<bool> include_gauge;
  std::optional<DuboisVariant> dubois_variant;
  std::optional<SearchBasis> search_basis;
};

/// Full pipeline: build scale -> solve trajectory -> per generator:
/// determining residual -> gauge -> conserved series -> structure / Noether /
/// equivalence gap. Writes trajectory.csv, sym_<name>.csv and report.txt
/// into out_dir; outputs are byte-identical across runs for identical input.
RunReport run_problem(const ProblemSpec& spec, const std::string& out_dir,
                      const RunOptions& options = {},
                      const std::string& problem_path = "");

std::string render_report(const RunReport& report);

/// 0 = all verdicts pass, 1 = tolerance exceeded. Input errors (2) and
/// numeric failures (3) surface as exceptions before a report exists.
int exit_code_for(const RunReport& report);

}  // namespace tsvar
