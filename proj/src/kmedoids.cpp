#include "ddsynth/kmedoids.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace ddsynth {

namespace {

double assign(const Eigen::Ref<const Eigen::MatrixXd>& D, const std::vector<int>& medoids, std::vector<int>& labels) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(medoids.size()); ++c)
      if (D(i, medoids[static_cast<std::size_t>(c)]) < D(i, medoids[static_cast<std::size_t>(best)])) best = c;
    labels[static_cast<std::size_t>(i)] = best;
    cost += D(i, medoids[static_cast<std::size_t>(best)]);
  }
  return cost;
}

}  // namespace

PamResult pam(const Eigen::Ref<const Eigen::MatrixXd>& D, int k, std::uint64_t seed) {
  const auto n = static_cast<int>(D.rows());
  if (D.cols() != n) throw std::invalid_argument("distance matrix must be square");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (k > n) throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the number of points " + std::to_string(n));

  std::mt19937_64 rng(seed);
  std::vector<int> medoids = {static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng))};
  std::vector<double> nearest(static_cast<std::size_t>(n));
  while (static_cast<int>(medoids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = D(i, medoids[0]);
      for (int m : medoids) d = std::min(d, D(i, m));
      nearest[static_cast<std::size_t>(i)] = d * d;
      total += d * d;
    }
    int pick = -1;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (int i = 0; i < n && pick < 0; ++i) {
        u -= nearest[static_cast<std::size_t>(i)];
        if (u <= 0.0 && nearest[static_cast<std::size_t>(i)] > 0.0) pick = i;
      }
    }
    if (pick < 0 || std::count(medoids.begin(), medoids.end(), pick))
      for (int i = 0; i < n; ++i)
        if (!std::count(medoids.begin(), medoids.end(), i)) {
          pick = i;
          break;
        }
    medoids.push_back(pick);
  }

  PamResult result;
  result.labels.assign(static_cast<std::size_t>(n), 0);
  result.cost = assign(D, medoids, result.labels);
  std::vector<int> trial_labels(static_cast<std::size_t>(n));
  for (bool improved = true; improved;) {
    improved = false;
    for (int c = 0; c < k; ++c)
      for (int h = 0; h < n; ++h) {
        if (std::count(medoids.begin(), medoids.end(), h)) continue;
        auto trial = medoids;
        trial[static_cast<std::size_t>(c)] = h;
        const double cost = assign(D, trial, trial_labels);
        if (cost < result.cost - 1e-12 * std::max(1.0, result.cost)) {
          medoids = trial;
          result.cost = cost;
          improved = true;
        }
      }
  }
  result.cost = assign(D, medoids, result.labels);
  result.medoids = medoids;
  std::set<int> used(result.labels.begin(), result.labels.end());
  result.effective_clusters = static_cast<int>(used.size());
  return result;
}

}  // namespace ddsynth
