#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace ddsynth {

/// Dynamic time warping with absolute-difference local cost.
/// `band` is a Sakoe-Chiba radius; it is widened to |len(a) - len(b)| so a path always exists.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar dtw_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
                                       std::optional<Eigen::Index> band = std::nullopt) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index n = a.size(), m = b.size();
  if (n == 0 || m == 0) return n == m ? Scalar(0) : std::numeric_limits<Scalar>::infinity();
  const Eigen::Index r = band ? std::max(*band, n > m ? n - m : m - n) : std::max(n, m);
  const Scalar inf = std::numeric_limits<Scalar>::infinity();

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> prev = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(m + 1, inf);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cur(m + 1);
  prev(0) = Scalar(0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    cur.setConstant(inf);
    const Eigen::Index lo = std::max<Eigen::Index>(1, i - r), hi = std::min(m, i + r);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      const Scalar cost = std::abs(a(i - 1) - b(j - 1));
      cur(j) = cost + std::min({prev(j - 1), prev(j), cur(j - 1)});
    }
    std::swap(prev, cur);
  }
  return prev(m);
}

}  // namespace ddsynth
