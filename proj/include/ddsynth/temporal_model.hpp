#pragma once

#include "ddsynth/diffusion.hpp"
#include "ddsynth/markov.hpp"
#include "ddsynth/segmentation.hpp"
#include "ddsynth/timeseries.hpp"

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace ddsynth {

/// Markov chain over pattern ids plus the empirical (alpha, beta) pools that drive segment sizes.
struct StateTransitionModel {
  MarkovChain chain;
  std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> conditional;  // (current, next) -> sizes of next
  std::vector<std::vector<std::pair<int, double>>> by_pattern;                     // pattern -> observed sizes
  std::vector<StateTriplet> initial;                                               // first triplet of every chain

  int pattern_count() const { return static_cast<int>(chain.states()); }
};

StateTransitionModel fit_state_model(const std::vector<std::vector<StateTriplet>>& chains, int pattern_count);

StateTriplet next_state(const StateTransitionModel& model, const StateTriplet& current, std::mt19937_64& rng);

/// `length` triplets beginning with `start`.
std::vector<StateTriplet> evolve_states(const StateTransitionModel& model, const StateTriplet& start, std::size_t length,
                                        std::uint64_t seed);

struct TemporalTrainConfig {
  SegmentConfig segment;         // match_threshold <= 0 calibrates it from the cluster's series
  double threshold_quantile = 0.25;
  DiffusionConfig diffusion;
};

/// Everything needed to generate series for one cluster.
struct ClusterTemporalModel {
  int cluster = 0;
  double bin_width = 1.0;
  SegmentConfig segment;
  PatternLibrary library;
  StateTransitionModel states;
  DiffusionModel diffusion;
  std::vector<double> initial_levels;
};

/// Diffusion training pairs: each non-flat segment, min-max normalised and continued with its
/// pattern's tail up to l_max, paired with the pattern.
std::vector<DiffusionSample> diffusion_samples(const std::vector<Eigen::VectorXd>& series,
                                               const std::vector<std::vector<StateTriplet>>& chains,
                                               const PatternLibrary& library, int l_max);

ClusterTemporalModel train_cluster_model(const std::vector<TimeSeries>& members, int cluster,
                                         const TemporalTrainConfig& cfg);

/// Alternates state evolution and conditional sampling, anchoring each segment to the previous one's
/// last value, clamps at zero and truncates to `target_len`.
TimeSeries generate_series(const ClusterTemporalModel& model, Eigen::Index target_len, std::uint64_t seed);

}  // namespace ddsynth
