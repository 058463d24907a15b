#pragma once

#include <Eigen/Core>

namespace ddsynth {

/// Magnitudes of DFT bins 1..K (DC excluded).
Eigen::VectorXd fourier_magnitudes(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index K);

/// Euclidean distance between the first K non-DC magnitude coefficients. Lengths must match.
double fourier_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                        Eigen::Index K);

}  // namespace ddsynth
