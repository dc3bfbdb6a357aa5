#pragma once

#include <cstddef>
#include <vector>

namespace tsvar {

/// Per-point residual series with domain bookkeeping. `first` is the index
/// of the first point of the series on the underlying scale; the series
/// covers [first, first + size). `scale` records the largest magnitude of
/// any individual term that entered the residual, so relative comparisons
/// mean "relative to the largest magnitude involved".
struct ResidualReport {
  std::size_t first = 0;
  std::vector<double> series;
  double max_abs = 0.0;
  double rms = 0.0;
  double scale = 0.0;

  std::size_t size() const { return series.size(); }
  bool empty() const { return series.empty(); }
  double relative_max() const {
    if (max_abs == 0.0) return 0.0;
    return scale > 0.0 ? max_abs / scale : max_abs;
  }
};

/// Builds a report from a residual series and the term-magnitude scale.
ResidualReport make_report(std::size_t first, std::vector<double> series,
                           double scale);

/// Accumulates max |term| while a residual formula is evaluated.
class ScaleTracker {
public:
  void note(double term) {
    const double a = term < 0 ? -term : term;
    if (a > scale_) scale_ = a;
  }
  double value() const { return scale_; }

private:
  double scale_ = 0.0;
};

}  // namespace tsvar
