#pragma once

#include "ddsynth/trace.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <string>
#include <vector>

namespace ddsynth {

/// Packet counts per bin of width `bin_width`, starting at `origin` (seconds).
struct TimeSeries {
  Eigen::VectorXd values;
  double bin_width = 1.0;
  double origin = 0.0;
  double duration = 0.0;  // max - min of the source timestamps, at least one bin
  std::string attack;

  Eigen::Index size() const { return values.size(); }
};

/// Counts `ts` (sorted) into bins [origin + b*w, origin + (b+1)*w), origin = min(ts).
/// Series shorter than two bins are zero-padded to length 2.
TimeSeries bin_timestamps(const std::vector<double>& ts, double bin_width, std::string attack);

/// Splits each label's packets into episodes separated by more than `idle_gap` seconds
/// of silence and bins every episode. Output is ordered by episode start.
std::vector<TimeSeries> split_episodes(const TraceDataset& dataset, double bin_width, double idle_gap);

/// Linear interpolation onto `n` evenly spaced points spanning the same support.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> resample_linear(const Eigen::MatrixBase<Derived>& x,
                                                                            Eigen::Index n) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  const Eigen::Index m = x.size();
  if (m == 1) {
    out.setConstant(x(0));
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar pos = n == 1 ? Scalar(0) : Scalar(i) * Scalar(m - 1) / Scalar(n - 1);
    const auto lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), m - 2);
    const Scalar frac = pos - Scalar(lo);
    out(i) = x(lo) * (Scalar(1) - frac) + x(lo + 1) * frac;
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar value_span(const Eigen::MatrixBase<Derived>& x) {
  return x.size() == 0 ? typename Derived::Scalar(0) : x.maxCoeff() - x.minCoeff();
}

/// Min-max scaling to [0, 1]; a flat input maps to zeros.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> minmax_normalize(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Scalar lo = x.minCoeff();
  const Scalar span = x.maxCoeff() - lo;
  if (span <= Scalar(0)) return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(x.size());
  return (x.array() - lo) / span;
}

}  // namespace ddsynth
