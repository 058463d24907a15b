#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ddsynth {

struct PamResult {
  std::vector<int> labels;   // cluster index per point, in [0, k)
  std::vector<int> medoids;  // point index of each cluster's medoid
  double cost = 0.0;         // sum of distances to the assigned medoid
  int effective_clusters = 0;
};

/// k-medoids (PAM) on a precomputed symmetric distance matrix: seeded k-medoids++ initialisation
/// followed by SWAP until no swap lowers the cost. Ties assign to the lowest cluster index,
/// so identical points collapse into one effective cluster.
PamResult pam(const Eigen::Ref<const Eigen::MatrixXd>& D, int k, std::uint64_t seed);

}  // namespace ddsynth
