#pragma once

#include "ddsynth/if_cluster.hpp"
#include "ddsynth/markov.hpp"
#include "ddsynth/timeseries.hpp"
#include "ddsynth/trace.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ddsynth {

enum class CombineMethod { Random, Markov, Imitative };

std::string to_string(CombineMethod m);
CombineMethod combine_method_from_string(const std::string& s);

struct CombinationConfig {
  CombineMethod method = CombineMethod::Imitative;
  double total_time = 0.0;  // seconds; random starts fall in [0, total_time - duration]
  std::uint64_t seed = 0;
  int counts = 1;           // tuples to emit (random, markov)
};

/// Fresh tuples: attack type and cluster uniform over the observed ones, duration uniform over the
/// observed durations, start uniform on [0, T - duration]. Sorted by start.
MetadataChain combine_random(const MetadataChain& m, const CombinationConfig& cfg);

/// First-order chain over joint (attack, cluster) states with add-one smoothing.
struct MetadataMarkov {
  std::vector<std::pair<std::string, int>> states;  // sorted
  MarkovChain chain;
  std::vector<double> gaps;                          // observed inter-start gaps
  std::vector<std::vector<double>> durations;        // per state

  std::size_t state_of(const Metadata& m) const;
};

MetadataMarkov fit_metadata_markov(const MetadataChain& m);

/// `cfg.counts` tuples from the chain starting at m's first state; starts advance by empirical gaps,
/// durations come from the state's empirical durations.
MetadataChain combine_markov(const MetadataChain& m, const CombinationConfig& cfg);

/// The source chain itself.
MetadataChain combine_imitative(const MetadataChain& m);

MetadataChain combine(const MetadataChain& m, const CombinationConfig& cfg);

/// Spreads the series over [start, start + duration): bin b of width duration / len receives
/// round-half-even(values[b]) timestamps, uniformly jittered inside the bin. Sorted.
std::vector<double> series_to_timestamps(const TimeSeries& s, double start, double duration, std::uint64_t seed);

/// Series generator for one cluster, called once per tuple.
using SeriesSource = std::function<TimeSeries(const Metadata& tuple, std::uint64_t seed)>;
/// Packet sampler for one attack type: `n` packets.
using PacketSource = std::function<std::vector<PacketRecord>(std::size_t n, std::uint64_t seed)>;

struct AssemblySources {
  std::map<int, SeriesSource> series;           // by cluster
  std::map<std::string, PacketSource> packets;  // by attack type
};

/// Per tuple: generate a series, convert it to timestamps, draw as many packets and pair them in order.
/// The merged trace is sorted by timestamp; packets carry the tuple's attack type as label.
TraceDataset assemble_trace(const MetadataChain& chain, const AssemblySources& sources, std::uint64_t seed);

}  // namespace ddsynth
