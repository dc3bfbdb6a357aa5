#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tsvar/errors.hpp"
#include "tsvar/problem.hpp"
#include "tsvar/runner.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitToleranceExceeded = 1;
constexpr int kExitInputError = 2;
constexpr int kExitNumericFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian mechanics and Lie-point symmetry verification on time scales"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "Solve a problem file and verify its generators");
  std::string problem_file;
  std::string out_dir;
  std::optional<double> drift_tol, residual_tol;
  bool no_gauge = false;
  std::string dubois;
  std::string search_file;
  run->add_option("problem", problem_file, "Problem file")->required();
  run->add_option("--out", out_dir, "Output directory for CSV series and report")->required();
  run->add_option("--drift-tol", drift_tol, "Conserved-quantity drift tolerance (relative)");
  run->add_option("--residual-tol", residual_tol, "Residual tolerance (relative)");
  run->add_flag("--no-gauge", no_gauge, "Exclude the gauge term from the conserved quantity");
  run->add_option("--dubois", dubois, "DuBois-Reymond variant: printed or sigma")
      ->check(CLI::IsMember({"printed", "sigma"}));
  run->add_option("--search", search_file, "Run the generator search with this basis file");

  CLI11_PARSE(app, argc, argv);

  try {
    const tsvar::ProblemSpec spec = tsvar::load_problem(problem_file);
    tsvar::RunOptions options;
    options.residual_tol = residual_tol;
    options.drift_tol = drift_tol;
    if (no_gauge) options.include_gauge = false;
    if (dubois == "printed") options.dubois_variant = tsvar::DuboisVariant::Printed;
    if (dubois == "sigma") options.dubois_variant = tsvar::DuboisVariant::SigmaForm;
    if (!search_file.empty()) options.search_basis = tsvar::load_basis(search_file);

    const tsvar::RunReport report =
        tsvar::run_problem(spec, out_dir, options, problem_file);
    std::cout << tsvar::render_report(report);
    return tsvar::exit_code_for(report) == 0 ? kExitPass : kExitToleranceExceeded;
  } catch (const tsvar::InputError& err) {
    std::cerr << "input error: " << err.what() << "\n";
    return kExitInputError;
  } catch (const tsvar::EvalError& err) {
    std::cerr << "input error: " << err.what() << "\n";
    return kExitInputError;
  } catch (const tsvar::NumericError& err) {
    std::cerr << "numeric failure: " << err.what() << "\n";
    return kExitNumericFailure;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitNumericFailure;
  }
}
