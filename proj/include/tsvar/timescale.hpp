#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "tsvar/expr.hpp"
#include "tsvar/report.hpp"

namespace tsvar {

enum class ScaleKind { Uniform, Geometric, Explicit };

struct PointClass {
  bool right_scattered = false;
  bool right_dense = false;
  bool left_scattered = false;
  bool left_dense = false;
};

/// A finite time scale: strictly increasing points t_0 < ... < t_{N-1} with
/// the jump operators fixed at the extremes (sigma(t_{N-1}) = t_{N-1},
/// rho(t_0) = t_0) and graininess mu_i = t_{i+1} - t_i, mu_{N-1} = 0.
/// Immutable; copies share storage.
class TimeScale {
public:
  static TimeScale uniform(double a, double b, std::size_t n_points);
  static TimeScale geometric(double t0, double ratio, std::size_t count);
  static TimeScale from_points(std::vector<double> points);

  std::size_t size() const { return data_->points.size(); }
  const std::vector<double>& points() const { return data_->points; }
  double point(std::size_t i) const;
  double sigma(std::size_t i) const;
  double rho(std::size_t i) const;
  double mu(std::size_t i) const;
  PointClass classify(std::size_t i) const;
  ScaleKind kind() const { return data_->kind; }

  bool same_scale(const TimeScale& other) const;

  /// Index of the scale point equal to `value` within a relative tolerance,
  /// or nullopt if no point matches.
  std::optional<std::size_t> locate(double value) const;

private:
  struct Data {
    std::vector<double> points;
    std::vector<double> mu;  // size N, mu[N-1] = 0
    ScaleKind kind;
  };
  explicit TimeScale(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  static TimeScale make(std::vector<double> points, ScaleKind kind);

  std::shared_ptr<const Data> data_;
};

/// Real values sampled on a TimeScale. The defined index range is the
/// contiguous block [offset, N-1-cut]; each delta derivative grows `cut`
/// by one, tracking the kappa-domain shrinkage.
class SampledFunction {
public:
  SampledFunction(TimeScale ts, std::vector<double> values,
                  std::size_t offset = 0, std::size_t cut = 0);

  /// Samples an expression of t over the whole scale.
  static SampledFunction from_expression(const TimeScale& ts,
                                         const Expression& e);

  const TimeScale& scale() const { return ts_; }
  std::size_t offset() const { return offset_; }
  std::size_t cut() const { return cut_; }
  std::size_t first() const { return offset_; }
  std::size_t last() const { return offset_ + values_.size() - 1; }
  std::size_t defined_count() const { return values_.size(); }

  double value(std::size_t index) const;  // absolute scale index

private:
  TimeScale ts_;
  std::vector<double> values_;
  std::size_t offset_;
  std::size_t cut_;
};

/// Exact forward quotient (f_{i+1} - f_i) / mu_i on the kappa-domain. On a
/// finite scale every interior point is right-scattered, so this is the
/// delta derivative itself, not an approximation.
SampledFunction delta_derivative(const SampledFunction& f);

/// Sum of f_i * mu_i for i in [i_a, i_b); the antiderivative difference
/// F(t_b) - F(t_a) realized on scattered points. Additive over adjacent
/// ranges; zero when i_a == i_b.
double delta_integral(const SampledFunction& f, std::size_t i_a,
                      std::size_t i_b);

/// Residuals of the two pointwise calculus identities: the shift rule
/// f^sigma = f + mu f^delta and the product rule
/// (fg)^delta = f^delta g + f^sigma g^delta.
struct CalculusIdentityReport {
  ResidualReport shift_rule;
  ResidualReport product_rule;
};
CalculusIdentityReport verify_calculus_identities(const SampledFunction& f,
                                                  const SampledFunction& g);

/// A one-parameter family q(t, alpha) with an optional time-shift direction.
/// The isochronous variation compares orbits at alpha0 and alpha0 + dalpha;
/// total-variation checks additionally shift time by dalpha * tau_shift(t),
/// which must land on scale points (lattice-preserving).
struct VariationFamily {
  Expression q_expr;                    // over {t, alpha}
  std::optional<Expression> tau_shift;  // over {t}
  double dalpha = 1e-6;
  double alpha0 = 0.0;
};

/// Residuals of the variational exchange identities. The two isochronous
/// exchanges are always checked; the three total-variation identities are
/// present only when the family carries a tau_shift.
struct VariationIdentityReport {
  ResidualReport exchange_delta;                   // delta(q^D) vs (delta q)^D
  ResidualReport exchange_sigma;                   // delta(q^s) vs (delta q)^s
  std::optional<ResidualReport> total_variation;   // Dq = dq + q^D Dt
  std::optional<ResidualReport> total_first;       // D(q^D) expansion
  std::optional<ResidualReport> total_second;      // D(q^DD) expansion
};
VariationIdentityReport verify_variation_identities(const VariationFamily& fam,
                                                    const TimeScale& ts);

}  // namespace tsvar
