#pragma once

#include <Eigen/Core>

#include <vector>

namespace ddsynth {

/// One segment: pattern id, length alpha and magnitude beta (max - min of the segment).
struct StateTriplet {
  int pattern = 0;
  int alpha = 0;
  double beta = 0.0;

  friend bool operator==(const StateTriplet&, const StateTriplet&) = default;
};

/// A min-max normalised shape of length l_max. Segments are matched against its prefixes.
struct Pattern {
  Eigen::VectorXd values;
  int support = 0;
};

struct PatternLibrary {
  std::vector<Pattern> patterns;

  int size() const { return static_cast<int>(patterns.size()); }
  const Pattern& operator[](int id) const { return patterns.at(static_cast<std::size_t>(id)); }
};

struct SegmentConfig {
  int l_min = 16;
  int l_max = 64;
  double match_threshold = 1.0;
  int min_support = 3;
  bool grow_library = true;  // false: never register new patterns (unmatched windows take the nearest one)
};

struct Segmentation {
  std::vector<StateTriplet> triplets;
  std::vector<bool> matched;  // triplet matched an existing pattern within the threshold
  PatternLibrary library;
};

/// Greedy sweep: at each position take the longest window (l_min..l_max) whose normalised form is within
/// `match_threshold` DTW of the equally long normalised prefix of a library pattern; otherwise register the
/// next window as a new pattern. Lengths are chosen so no tail shorter than l_min is left behind.
/// `library` seeds the sweep, so a cluster's series can share one library.
Segmentation segment_series(const Eigen::Ref<const Eigen::VectorXd>& s, const SegmentConfig& cfg,
                            PatternLibrary library = {});

/// Segments several series against one growing library, then folds patterns below min_support into
/// their nearest supported neighbour.
struct CorpusSegmentation {
  std::vector<std::vector<StateTriplet>> chains;
  PatternLibrary library;
};
CorpusSegmentation segment_corpus(const std::vector<Eigen::VectorXd>& series, const SegmentConfig& cfg);

/// p * beta / (max(p) - min(p)), first alpha samples.
Eigen::VectorXd reconstruct_segment(const StateTriplet& t, const PatternLibrary& lib);

/// 25th percentile of pairwise DTW between normalised length-l_max windows (stride l_max / 2).
double calibrate_threshold(const std::vector<Eigen::VectorXd>& series, int l_max, double quantile = 0.25);

/// Distance used for matching: DTW between the normalised window and the normalised pattern prefix.
double prefix_distance(const Eigen::Ref<const Eigen::VectorXd>& window, const Pattern& p);

}  // namespace ddsynth
