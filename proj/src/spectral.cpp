#include "ddsynth/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddsynth {

Eigen::VectorXd fourier_magnitudes(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index K) {
  if (K < 0 || 2 * K > x.size())
    throw std::invalid_argument("coefficient count " + std::to_string(K) + " exceeds half the length " +
                                std::to_string(x.size()));
  Eigen::FFT<double> fft;
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  Eigen::VectorXd mag(K);
  for (Eigen::Index k = 0; k < K; ++k) mag(k) = std::abs(out[static_cast<std::size_t>(k + 1)]);
  return mag;
}

double fourier_distance(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                        Eigen::Index K) {
  if (a.size() != b.size())
    throw std::invalid_argument("fourier_distance needs equal lengths, got " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
  return (fourier_magnitudes(a, K) - fourier_magnitudes(b, K)).norm();
}

}  // namespace ddsynth
