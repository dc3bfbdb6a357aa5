#include "tsvar/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsvar/errors.hpp"

namespace tsvar {

ResidualReport make_report(std::size_t first, std::vector<double> series,
                           double scale) {
  ResidualReport report;
  report.first = first;
  report.series = std::move(series);
  report.scale = scale;
  double sum_sq = 0.0;
  for (double r : report.series) {
    const double a = std::abs(r);
    if (a > report.max_abs) report.max_abs = a;
    sum_sq += r * r;
  }
  report.rms = report.series.empty()
                   ? 0.0
                   : std::sqrt(sum_sq / static_cast<double>(report.series.size()));
  return report;
}

// ---------------------------------------------------------------------------
// TimeScale

TimeScale TimeScale::make(std::vector<double> points, ScaleKind kind) {
  if (points.size() < 2) {
    throw InputError("time scale needs at least 2 points, got " +
                     std::to_string(points.size()));
  }
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i] < points[i + 1])) {
      throw InputError("time scale points must be strictly increasing (index " +
                       std::to_string(i) + ")");
    }
  }
  auto data = std::make_shared<Data>();
  data->mu.resize(points.size());
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    data->mu[i] = points[i + 1] - points[i];
  data->mu.back() = 0.0;  // sigma fixes the maximal point
  data->points = std::move(points);
  data->kind = kind;
  return TimeScale(std::move(data));
}

TimeScale TimeScale::uniform(double a, double b, std::size_t n_points) {
  if (!(b > a)) throw InputError("uniform scale needs b > a");
  if (n_points < 2) throw InputError("uniform scale needs at least 2 points");
  const double step = (b - a) / static_cast<double>(n_points - 1);
  std::vector<double> points(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    points[i] = a + step * static_cast<double>(i);
  points.back() = b;
  return make(std::move(points), ScaleKind::Uniform);
}

TimeScale TimeScale::geometric(double t0, double ratio, std::size_t count) {
  if (!(t0 > 0.0)) throw InputError("geometric scale needs t0 > 0");
  if (!(ratio > 1.0)) throw InputError("geometric scale needs ratio > 1");
  if (count < 2) throw InputError("geometric scale needs at least 2 points");
  std::vector<double> points(count);
  double t = t0;
  for (std::size_t i = 0; i < count; ++i) {
    points[i] = t;
    t *= ratio;
  }
  return make(std::move(points), ScaleKind::Geometric);
}

TimeScale TimeScale::from_points(std::vector<double> points) {
  return make(std::move(points), ScaleKind::Explicit);
}

double TimeScale::point(std::size_t i) const {
  if (i >= size()) throw InputError("time scale index out of range");
  return data_->points[i];
}

double TimeScale::sigma(std::size_t i) const {
  if (i >= size()) throw InputError("time scale index out of range");
  return i + 1 < size() ? data_->points[i + 1] : data_->points[i];
}

double TimeScale::rho(std::size_t i) const {
  if (i >= size()) throw InputError("time scale index out of range");
  return i > 0 ? data_->points[i - 1] : data_->points[i];
}

double TimeScale::mu(std::size_t i) const {
  if (i >= size()) throw InputError("time scale index out of range");
  return data_->mu[i];
}

PointClass TimeScale::classify(std::size_t i) const {
  if (i >= size()) throw InputError("time scale index out of range");
  PointClass c;
  c.right_scattered = i + 1 < size();
  c.right_dense = !c.right_scattered;
  c.left_scattered = i > 0;
  c.left_dense = !c.left_scattered;
  return c;
}

bool TimeScale::same_scale(const TimeScale& other) const {
  return data_ == other.data_ || data_->points == other.data_->points;
}

std::optional<std::size_t> TimeScale::locate(double value) const {
  const auto& pts = data_->points;
  const double tol = 1e-9 * std::max(1.0, std::abs(value));
  auto it = std::lower_bound(pts.begin(), pts.end(), value);
  if (it != pts.end() && std::abs(*it - value) <= tol)
    return static_cast<std::size_t>(it - pts.begin());
  if (it != pts.begin() && std::abs(*(it - 1) - value) <= tol)
    return static_cast<std::size_t>(it - pts.begin()) - 1;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SampledFunction

SampledFunction::SampledFunction(TimeScale ts, std::vector<double> values,
                                 std::size_t offset, std::size_t cut)
    : ts_(std::move(ts)), values_(std::move(values)), offset_(offset), cut_(cut) {
  if (offset_ + values_.size() + cut_ != ts_.size()) {
    throw InputError("sampled function: values do not align with the scale");
  }
}

SampledFunction SampledFunction::from_expression(const TimeScale& ts,
                                                 const Expression& e) {
  std::vector<double> values(ts.size());
  Bindings b;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    b.set("t", ts.point(i));
    values[i] = e.evaluate(b);
  }
  return SampledFunction(ts, std::move(values));
}

double SampledFunction::value(std::size_t index) const {
  if (index < offset_ || index >= offset_ + values_.size()) {
    throw InputError("sampled function index " + std::to_string(index) +
                     " outside defined range");
  }
  return values_[index - offset_];
}

SampledFunction delta_derivative(const SampledFunction& f) {
  if (f.defined_count() < 2) {
    throw NumericError("delta derivative: domain exhausted (fewer than 2 defined points)");
  }
  const TimeScale& ts = f.scale();
  std::vector<double> out(f.defined_count() - 1);
  for (std::size_t k = 0; k + 1 < f.defined_count(); ++k) {
    const std::size_t i = f.offset() + k;
    out[k] = (f.value(i + 1) - f.value(i)) / ts.mu(i);
  }
  return SampledFunction(ts, std::move(out), f.offset(), f.cut() + 1);
}

double delta_integral(const SampledFunction& f, std::size_t i_a,
                      std::size_t i_b) {
  if (i_a > i_b) throw InputError("delta integral: indices out of order");
  if (i_a < f.first() || (i_b > i_a && i_b - 1 > f.last()) || i_b > f.scale().size()) {
    throw InputError("delta integral: index range outside the defined domain");
  }
  double sum = 0.0;
  for (std::size_t i = i_a; i < i_b; ++i) sum += f.value(i) * f.scale().mu(i);
  return sum;
}

// ---------------------------------------------------------------------------
// Calculus identities

CalculusIdentityReport verify_calculus_identities(const SampledFunction& f,
                                                  const SampledFunction& g) {
  if (!f.scale().same_scale(g.scale())) {
    throw InputError("calculus identities: f and g live on different scales");
  }
  if (f.scale().size() < 2) {
    throw InputError("calculus identities: scale needs at least 2 points");
  }
  const TimeScale& ts = f.scale();
  const SampledFunction fd = delta_derivative(f);
  const SampledFunction gd = delta_derivative(g);

  const std::size_t lo = std::max(f.first(), g.first());
  const std::size_t hi = std::min(f.last(), g.last());  // inclusive
  if (hi <= lo) throw InputError("calculus identities: overlapping domain too small");

  // f^sigma - (f + mu f^delta) on the shared kappa-domain.
  std::vector<double> shift;
  ScaleTracker shift_scale;
  for (std::size_t i = lo; i < hi; ++i) {
    const double lhs = f.value(i + 1);
    const double rhs = f.value(i) + ts.mu(i) * fd.value(i);
    shift_scale.note(lhs);
    shift_scale.note(f.value(i));
    shift_scale.note(ts.mu(i) * fd.value(i));
    shift.push_back(lhs - rhs);
  }

  // (fg)^delta - (f^delta g + f^sigma g^delta) on the same domain.
  std::vector<double> product;
  ScaleTracker product_scale;
  for (std::size_t i = lo; i < hi; ++i) {
    const double prod_d =
        (f.value(i + 1) * g.value(i + 1) - f.value(i) * g.value(i)) / ts.mu(i);
    const double leibniz = fd.value(i) * g.value(i) + f.value(i + 1) * gd.value(i);
    product_scale.note(prod_d);
    product_scale.note(fd.value(i) * g.value(i));
    product_scale.note(f.value(i + 1) * gd.value(i));
    product.push_back(prod_d - leibniz);
  }

  CalculusIdentityReport report;
  report.shift_rule = make_report(lo, std::move(shift), shift_scale.value());
  report.product_rule = make_report(lo, std::move(product), product_scale.value());
  return report;
}

// ---------------------------------------------------------------------------
// Variation identities

namespace {

std::vector<double> sample_orbit(const Expression& q, const TimeScale& ts,
                                 double alpha) {
  std::vector<double> values(ts.size());
  Bindings b;
  b.set("alpha", alpha);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    b.set("t", ts.point(i));
    values[i] = q.evaluate(b);
  }
  return values;
}

std::vector<double> ladder_of(const TimeScale& ts, const std::vector<double>& v) {
  if (v.size() < 2) return {};
  std::vector<double> out(v.size() - 1);
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    out[i] = (v[i + 1] - v[i]) / ts.mu(i);
  return out;
}

}  // namespace

VariationIdentityReport verify_variation_identities(const VariationFamily& fam,
                                                    const TimeScale& ts) {
  if (!(fam.dalpha > 0.0)) throw InputError("variation family needs dalpha > 0");
  const std::size_t n = ts.size();

  const std::vector<double> base = sample_orbit(fam.q_expr, ts, fam.alpha0);
  const std::vector<double> varied =
      sample_orbit(fam.q_expr, ts, fam.alpha0 + fam.dalpha);

  const std::vector<double> base_d = ladder_of(ts, base);
  const std::vector<double> base_dd = ladder_of(ts, base_d);
  const std::vector<double> varied_d = ladder_of(ts, varied);
  const std::vector<double> varied_dd = ladder_of(ts, varied_d);
  const std::vector<double> varied_ddd = ladder_of(ts, varied_dd);

  std::vector<double> dq(n);
  for (std::size_t i = 0; i < n; ++i) dq[i] = varied[i] - base[i];
  const std::vector<double> dq_d = ladder_of(ts, dq);

  VariationIdentityReport report;

  // Exchange with the delta derivative: delta(q^D) - (delta q)^D.
  {
    std::vector<double> series(n - 1);
    ScaleTracker scale;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double lhs = varied_d[i] - base_d[i];
      scale.note(lhs);
      scale.note(dq_d[i]);
      series[i] = lhs - dq_d[i];
    }
    report.exchange_delta = make_report(0, std::move(series), scale.value());
  }

  // Exchange with sigma: delta(q^sigma) - (delta q)^sigma.
  {
    std::vector<double> series(n - 1);
    ScaleTracker scale;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double lhs = varied[i + 1] - base[i + 1];
      scale.note(lhs);
      scale.note(dq[i + 1]);
      series[i] = lhs - dq[i + 1];
    }
    report.exchange_sigma = make_report(0, std::move(series), scale.value());
  }

  if (!fam.tau_shift) return report;

  // Shifted-time bookkeeping. Each point maps to the scale point at
  // t_i + dalpha * tau_shift(t_i); the map must stay on the lattice for
  // the identities to be defined at all.
  std::vector<double> shift(n);
  std::vector<std::optional<std::size_t>> target(n);
  {
    Bindings b;
    for (std::size_t i = 0; i < n; ++i) {
      b.set("t", ts.point(i));
      shift[i] = fam.dalpha * fam.tau_shift->evaluate(b);
      target[i] = ts.locate(ts.point(i) + shift[i]);
    }
  }
  if (!target[0]) {
    throw InputError("tau_shift is not lattice-preserving: t_0 + dalpha*tau_shift" +
                     std::string(" does not land on a scale point"));
  }

  const std::vector<double> shift_d = ladder_of(ts, shift);

  // Total variation of a ladder: varied ladder at the shifted point minus
  // base ladder at the base point.
  auto total_of = [&](const std::vector<double>& varied_ladder,
                      const std::vector<double>& base_ladder,
                      std::size_t i) -> std::optional<double> {
    if (i >= base_ladder.size() || !target[i]) return std::nullopt;
    const std::size_t j = *target[i];
    if (j >= varied_ladder.size()) return std::nullopt;
    return varied_ladder[j] - base_ladder[i];
  };

  std::vector<double> total_q(n), total_qd(n);
  std::vector<bool> total_q_ok(n, false), total_qd_ok(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (auto v = total_of(varied, base, i)) {
      total_q[i] = *v;
      total_q_ok[i] = true;
    }
    if (auto v = total_of(varied_d, base_d, i)) {
      total_qd[i] = *v;
      total_qd_ok[i] = true;
    }
  }

  // Dq - (dq + q^D Dt), with the q^D bookkeeping on the varied orbit so a
  // one-step lattice shift closes exactly.
  {
    std::vector<double> series;
    ScaleTracker scale;
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (!total_q_ok[i] || i >= varied_d.size()) break;
      const double rhs = dq[i] + varied_d[i] * shift[i];
      scale.note(total_q[i]);
      scale.note(dq[i]);
      scale.note(varied_d[i] * shift[i]);
      series.push_back(total_q[i] - rhs);
    }
    if (series.empty()) {
      throw InputError("tau_shift is not lattice-preserving on this scale");
    }
    report.total_variation = make_report(0, std::move(series), scale.value());
  }

  // D(q^D) - [(Dq)^D - q^D (Dt)^D - mu (Dt)^D q^DD].
  {
    std::vector<double> series;
    ScaleTracker scale;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!total_qd_ok[i] || !total_q_ok[i] || !total_q_ok[i + 1]) break;
      if (i >= varied_dd.size() || i >= shift_d.size()) break;
      const double dq_total_d = (total_q[i + 1] - total_q[i]) / ts.mu(i);
      const double rhs = dq_total_d - varied_d[i] * shift_d[i] -
                         ts.mu(i) * shift_d[i] * varied_dd[i];
      scale.note(total_qd[i]);
      scale.note(dq_total_d);
      scale.note(varied_d[i] * shift_d[i]);
      scale.note(ts.mu(i) * shift_d[i] * varied_dd[i]);
      series.push_back(total_qd[i] - rhs);
    }
    if (!series.empty())
      report.total_first = make_report(0, std::move(series), scale.value());
  }

  // D(q^DD) - [(Dq^D)^D - q^DD (Dt)^D - mu (Dt)^D q^DDD].
  {
    std::vector<double> series;
    ScaleTracker scale;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!total_qd_ok[i] || !total_qd_ok[i + 1]) break;
      if (i >= varied_ddd.size() || i >= shift_d.size()) break;
      auto total_qdd = total_of(varied_dd, base_dd, i);
      if (!total_qdd) break;
      const double dqd_total_d = (total_qd[i + 1] - total_qd[i]) / ts.mu(i);
      const double rhs = dqd_total_d - varied_dd[i] * shift_d[i] -
                         ts.mu(i) * shift_d[i] * varied_ddd[i];
      scale.note(*total_qdd);
      scale.note(dqd_total_d);
      scale.note(varied_dd[i] * shift_d[i]);
      scale.note(ts.mu(i) * shift_d[i] * varied_ddd[i]);
      series.push_back(*total_qdd - rhs);
    }
    if (!series.empty())
      report.total_second = make_report(0, std::move(series), scale.value());
  }

  return report;
}

}  // namespace tsvar
