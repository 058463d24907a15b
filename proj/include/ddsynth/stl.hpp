#pragma once

#include <Eigen/Core>

#include <stdexcept>

namespace ddsynth {

struct DecomposedSeries {
  Eigen::VectorXd trend;
  Eigen::VectorXd seasonal;
  Eigen::VectorXd residual;

  const Eigen::VectorXd& intensity() const { return trend; }
  Eigen::VectorXd mode() const { return seasonal + residual; }
};

struct StlOptions {
  int seasonal_window = 7;  // odd, >= 7
  int trend_window = 0;     // 0: smallest odd >= 1.5 * period / (1 - 1.5 / seasonal_window)
  int low_pass_window = 0;  // 0: smallest odd >= period
  int inner_iterations = 2;
};

class SeriesTooShort : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Seasonal-trend decomposition by loess (degree-1 local fits, tricube weights, no robustness pass).
/// Requires len >= 2 * period and period >= 2; shorter input raises SeriesTooShort, use decompose() instead.
DecomposedSeries stl_decompose(const Eigen::Ref<const Eigen::VectorXd>& x, int period, const StlOptions& opts = {});

/// Dominant period from the autocorrelation of the linearly detrended series;
/// falls back to max(2, len / 8) when no positive peak exists.
int estimate_period(const Eigen::Ref<const Eigen::VectorXd>& x);

/// STL with `period` (0: estimated). Falls back to len / 8 when the period does not fit,
/// and to trend = x for series shorter than four samples.
DecomposedSeries decompose(const Eigen::Ref<const Eigen::VectorXd>& x, int period = 0);

/// Degree-1 loess of y (observed at positions 0..n-1) evaluated at arbitrary positions.
Eigen::VectorXd loess(const Eigen::Ref<const Eigen::VectorXd>& y, int window, const Eigen::Ref<const Eigen::VectorXd>& at);

}  // namespace ddsynth
