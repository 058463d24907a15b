#pragma once

#include "ddsynth/timeseries.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace ddsynth {

/// One attack occurrence: (attack type, cluster, start, duration).
struct Metadata {
  std::string attack;
  int cluster = 0;
  double start = 0.0;
  double duration = 0.0;

  friend bool operator==(const Metadata&, const Metadata&) = default;
};

/// Sorted ascending by start.
using MetadataChain = std::vector<Metadata>;

struct DistanceBundle {
  Eigen::MatrixXd intensity;  // DTW on trend components
  Eigen::MatrixXd periodic;   // Fourier-magnitude distance on seasonal + residual
  Eigen::MatrixXd combined;   // sqrt(intensity^2 + periodic^2)
};

struct IfClusterConfig {
  int k = 3;
  int period = 0;  // STL period in resampled bins; 0 estimates it per series
  int fourier_k = 32;
  int resample_len = 128;
  std::uint64_t seed = 0;
};

struct IfClusterResult {
  std::vector<int> assignment;  // cluster per input series
  MetadataChain chain;
  DistanceBundle distances;
  std::vector<int> medoids;
  int effective_clusters = 0;
};

DistanceBundle if_distances(const std::vector<TimeSeries>& seqs, const IfClusterConfig& cfg);

/// Integrated-feature clustering: resample, decompose, build the combined distance matrix,
/// partition with k-medoids and emit the start-sorted metadata chain.
IfClusterResult if_cluster(const std::vector<TimeSeries>& seqs, const IfClusterConfig& cfg);

/// Stable sort by start.
void sort_chain(MetadataChain& chain);

}  // namespace ddsynth
