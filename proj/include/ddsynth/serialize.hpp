#pragma once

#include "ddsynth/if_cluster.hpp"
#include "ddsynth/temporal_model.hpp"
#include "ddsynth/timeseries.hpp"

#include <map>
#include <string>
#include <vector>

namespace ddsynth {

/// One `{"attack", "cluster", "start", "duration"}` object per line.
std::string chain_to_jsonl(const MetadataChain& chain);
MetadataChain chain_from_jsonl(const std::string& text);

std::string series_to_json(const TimeSeries& s);
TimeSeries series_from_json(const std::string& text);

/// Complete cluster model: pattern library, state model, diffusion weights and anchors.
std::string temporal_model_to_json(const ClusterTemporalModel& m);
ClusterTemporalModel temporal_model_from_json(const std::string& text);

}  // namespace ddsynth
